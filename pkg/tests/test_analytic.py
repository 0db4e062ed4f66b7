import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import rgamma

from mcshare import analytic
from mcshare.params import SystemParams
from mcshare.specialfn import beta_delta, rho

DEFAULTS = SystemParams()


# --- independent oracles ------------------------------------------------------

def p1_by_plain_quadrature(theta, params):
    """Direct numerical integration of the backhaul success integrand,
    done here from scratch (no shared code with the implementation)."""
    r_ = rho(theta, params.alpha_i)
    z = math.pi * params.lambda_c * (1.0 + r_)
    y = params.epsilon * theta * params.power_ratio / params.x_d**params.alpha_i
    val, err = quad(
        lambda r: r * math.exp(-z * r * r) / (1.0 + y * r**params.alpha_i),
        0.0,
        math.sqrt(30.0 / z),
        epsabs=1e-14,
        epsrel=1e-13,
        limit=300,
    )
    assert err < 1e-10
    return 2.0 * math.pi * params.lambda_c * val


def p2_triple_sum_literal(theta, x_fac, k, alpha, j_max, q_max):
    """The access-link series written out literally, term by term,
    using scipy's reciprocal Gamma for the pole handling."""
    total = 0.0
    for j in range(j_max + 1):
        for m in range(j + 1):
            n = j - m
            c = (k**j) * ((-theta) ** n) / (math.exp(k) * math.factorial(j) * math.factorial(n))
            inner = 0.0
            for q in range(q_max + 1):
                a = 2.0 * q / alpha
                gam = math.gamma(a + 1.0) * float(rgamma(a - n + 1.0))
                inner += ((-1.0) ** q) * (x_fac**q) / math.factorial(q) * theta ** (a - n) * gam
            total += c * inner
    return total


def rate_by_nested_quadrature(params):
    """Ergodic rate in (t, v) coordinates: an integration path sharing no
    code (and no variable choice) with the implementation."""
    f_fac = params.power_ratio * params.epsilon / params.x_d**4
    lam_pi_sq = (params.lambda_c * math.pi) ** 2

    def inner(t):
        if t > 600.0:
            return 0.0
        theta = math.expm1(t)
        r_ = rho(theta, 4.0) if theta > 0 else 0.0
        c = f_fac * theta / lam_pi_sq / (1.0 + r_) ** 2
        val, _ = quad(lambda w: math.exp(-w) / (1.0 + c * w * w), 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
        return val / (1.0 + r_)

    val, err = quad(inner, 0.0, np.inf, epsabs=1e-10, epsrel=1e-10, limit=400)
    assert err < 1e-8
    return val


# --- Laplace transforms ---------------------------------------------------------

def test_laplace_ic_example():
    p = DEFAULTS
    # exp(-pi * 100^2 * 6e-6 * pi/4), composed independently
    assert analytic.laplace_ic(1.0, 100.0, p) == pytest.approx(0.86239311187577, rel=1e-12)
    assert analytic.laplace_ic(1.0, 0.0, p) == 1.0


def test_laplace_ic_monotone():
    p = DEFAULTS
    for r1, r2 in [(10.0, 50.0), (50.0, 400.0)]:
        assert analytic.laplace_ic(1.0, r2, p) < analytic.laplace_ic(1.0, r1, p)
    for t1, t2 in [(0.1, 1.0), (1.0, 10.0)]:
        assert analytic.laplace_ic(t2, 100.0, p) < analytic.laplace_ic(t1, 100.0, p)


def test_laplace_io_examples():
    p = DEFAULTS
    assert analytic.laplace_io(1.0, 500.0, p) == pytest.approx(0.001582385280801721, rel=1e-12)
    assert analytic.laplace_io(1.0, p.x_d, p) == pytest.approx(
        1.0 / (1.0 + p.epsilon * p.power_ratio), rel=1e-14
    )
    p0 = p.with_overrides(epsilon=0.0)
    assert analytic.laplace_io(1.0, 2000.0, p0) == 1.0


# --- p1 --------------------------------------------------------------------------

def test_p1_matches_independent_quadrature():
    got = analytic.p1_success(1.0, DEFAULTS)
    assert got == pytest.approx(p1_by_plain_quadrature(1.0, DEFAULTS), abs=1e-9)
    assert got == pytest.approx(0.18575625731994527, abs=1e-9)  # frozen from the oracle


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.8])
@pytest.mark.parametrize("theta_db", [-15.0, -5.0, 0.0, 5.0, 15.0])
def test_p1_two_paths_agree(eps, theta_db):
    p = DEFAULTS.with_overrides(epsilon=eps)
    theta = 10.0 ** (theta_db / 10.0)
    assert abs(analytic.p1_success(theta, p) - analytic.p1_success_tan(theta, p)) < 1e-8


def test_p1_closed_form_limit():
    p0 = DEFAULTS.with_overrides(epsilon=0.0)
    for theta in np.logspace(-2, 2, 15):
        closed = analytic.p1_closed_no_al(float(theta), p0)
        assert analytic.p1_success(float(theta), p0) == pytest.approx(closed, abs=1e-6)
    assert analytic.p1_closed_no_al(1.0, p0) == pytest.approx(1.0 / (1.0 + math.pi / 4.0), rel=1e-14)
    # sqrt(10)-threshold value via rho, evaluated independently
    assert analytic.p1_closed_no_al(10.0, p0) == pytest.approx(0.20004961028054147, rel=1e-12)


def test_p1_closed_form_lambda_independent():
    for lam in (1e-6, 6e-6):
        p = DEFAULTS.with_overrides(lambda_c=lam)
        assert analytic.p1_closed_no_al(2.0, p) == analytic.p1_closed_no_al(2.0, DEFAULTS)


def test_p1_limits_and_clamps():
    assert analytic.p1_success(1e-9, DEFAULTS) == pytest.approx(1.0, abs=1e-4)
    assert 0.0 <= analytic.p1_success(1e4, DEFAULTS) <= 1.0
    with pytest.raises(ValueError):
        analytic.p1_success(0.0, DEFAULTS)


def test_p1_lambda_monotone_when_leaky():
    vals = [analytic.p1_success(1.0, DEFAULTS.with_overrides(lambda_c=lam)) for lam in (1e-6, 3e-6, 6e-6)]
    assert vals[0] < vals[1] < vals[2]
    p0 = DEFAULTS.with_overrides(epsilon=0.0)
    ref = [analytic.p1_success(1.0, p0.with_overrides(lambda_c=lam)) for lam in (1e-6, 6e-6)]
    assert abs(ref[0] - ref[1]) < 1e-9


def test_p1_intermediates():
    _, inter = analytic.p1_success_detailed(1.0, DEFAULTS)
    assert inter.z_factor == pytest.approx(math.pi * 6e-6 * (1.0 + math.pi / 4.0), rel=1e-12)
    assert inter.y_factor == pytest.approx(0.1 * 6.309573444801929e-05 / 625.0, rel=1e-12)
    assert inter.quadrature_error < 1e-8


# --- x_factor ---------------------------------------------------------------------

def test_x_factor_value():
    p = DEFAULTS
    expected = (
        p.lambda_c
        * math.pi
        * math.sqrt(0.1 * 8.0**3.5)
        * math.sqrt(10.0**4.2)
        * beta_delta(4.0)
    )
    got = analytic.x_factor(p)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.044856819494918945, rel=1e-12)


def test_x_factor_scalings():
    assert analytic.x_factor(DEFAULTS.with_overrides(epsilon=0.0)) == 0.0
    doubled = analytic.x_factor(DEFAULTS.with_overrides(lambda_c=1.2e-5))
    assert doubled == pytest.approx(2.0 * analytic.x_factor(DEFAULTS), rel=1e-12)


# --- p2 ---------------------------------------------------------------------------

def test_p2_k0_collapse():
    for eps in (0.1, 0.8):
        p = DEFAULTS.with_overrides(k_factor=0.0, epsilon=eps)
        x = analytic.x_factor(p)
        for theta in np.logspace(-2, 1, 10):
            ref = math.exp(-x * float(theta) ** 0.5)
            assert analytic.p2_series(float(theta), p) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("k", [0.0, 1.3, 2.0])
@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_p2_matches_literal_triple_sum(k, theta):
    p = DEFAULTS.with_overrides(k_factor=k, j_trunc=25, q_trunc=25)
    literal = p2_triple_sum_literal(theta, analytic.x_factor(p), k, p.alpha_i, 25, 25)
    assert analytic.p2_series_detailed(theta, p).raw_value == pytest.approx(literal, abs=1e-9)


@pytest.mark.parametrize("k", [0.0, 2.0])
@pytest.mark.parametrize("eps,theta", [(0.1, 1.0), (0.8, 10.0), (0.8, 0.1)])
def test_p2_matches_levy_quadrature(k, eps, theta):
    """At alpha_i = 4 the normalized interference has Laplace transform
    exp(-C sqrt(s)), i.e. it is exactly Levy distributed, so the success
    probability can be computed by direct quadrature of the Rician CCDF
    against the Levy density: an exact, series-free route."""
    from mcshare.specialfn import marcum_q1

    p = DEFAULTS.with_overrides(epsilon=eps, k_factor=k)
    c = analytic.x_factor(p) / math.sqrt(p.epsilon)
    levy = lambda x: c / (2.0 * math.sqrt(math.pi * x**3)) * math.exp(-c * c / (4.0 * x))
    a = math.sqrt(2.0 * k)
    exact, err = quad(
        lambda x: marcum_q1(a, math.sqrt(2.0 * theta * p.epsilon * x)) * levy(x),
        0.0,
        np.inf,
        epsabs=1e-11,
        limit=400,
    )
    assert err < 1e-8
    assert analytic.p2_series(theta, p) == pytest.approx(exact, abs=1e-8)


def test_p2_theta_zero_limit():
    assert analytic.p2_series(1e-12, DEFAULTS) == pytest.approx(1.0, abs=1e-6)


def test_p2_monotone_in_theta_and_eps():
    thetas = np.logspace(-2, 1.5, 20)
    vals = [analytic.p2_series(float(t), DEFAULTS) for t in thetas]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    by_eps = [analytic.p2_series(1.0, DEFAULTS.with_overrides(epsilon=e)) for e in (0.1, 0.4, 0.8)]
    assert by_eps[0] > by_eps[1] > by_eps[2]


def test_p2_truncation_stability():
    p70 = DEFAULTS
    p90 = DEFAULTS.with_overrides(j_trunc=90, q_trunc=90)
    for theta in (0.1, 1.0, 10.0):
        assert abs(analytic.p2_series(theta, p70) - analytic.p2_series(theta, p90)) < 1e-9


def test_p2_result_diagnostics():
    res = analytic.p2_series_detailed(1.0, DEFAULTS)
    assert res.series_terms_used == (70, 70)
    assert 0.0 <= res.value <= 1.0
    assert res.largest_term >= abs(res.raw_value) * 0.1
    assert not res.ill_conditioned


def test_p2_simplified_variant():
    # K=0 keeps only n=0, where the unweighted q-sum is just Q+1 terms of 1
    p = DEFAULTS.with_overrides(k_factor=0.0)
    w = analytic.x_factor(p) * 1.0 ** (2.0 / p.alpha_i)
    assert analytic.p2_series_simplified(1.0, p) == pytest.approx(math.exp(-w) * 71.0, rel=1e-10)
    # the two series variants genuinely disagree; the difference is reported
    assert abs(analytic.p2_series_simplified(1.0, DEFAULTS) - analytic.p2_series(1.0, DEFAULTS)) > 0.01


# --- joint invariances --------------------------------------------------------------

def test_joint_power_scaling_invariance():
    shifted = DEFAULTS.with_overrides(p_c_dbm=55.0, p_o_dbm=13.0)
    assert analytic.p1_success(1.0, shifted) == pytest.approx(analytic.p1_success(1.0, DEFAULTS), rel=1e-12)
    assert analytic.p2_series(1.0, shifted) == pytest.approx(analytic.p2_series(1.0, DEFAULTS), rel=1e-12)
    a = analytic.ergodic_rate_bh(shifted).integral_value
    b = analytic.ergodic_rate_bh(DEFAULTS).integral_value
    assert a == pytest.approx(b, rel=1e-10)


# --- ergodic rate ---------------------------------------------------------------------

def test_rate_against_independent_path():
    res = analytic.ergodic_rate_bh(DEFAULTS)
    assert res.est_error <= 1e-6
    assert res.integral_value == pytest.approx(rate_by_nested_quadrature(DEFAULTS), abs=1e-8)
    assert res.integral_value == pytest.approx(0.5212681999167734, abs=1e-8)  # frozen from the oracle
    assert res.f_factor == pytest.approx(DEFAULTS.power_ratio * 0.1 / 625.0, rel=1e-12)


def test_rate_zero_leakage_limit():
    p0 = DEFAULTS.with_overrides(epsilon=0.0)
    res = analytic.ergodic_rate_bh(p0)
    # exact 1-D reduction int_0^inf dt/(1+rho(e^t - 1)), evaluated independently
    assert res.integral_value == pytest.approx(1.4889876246658296, abs=1e-8)
    assert res.f_factor == 0.0


def test_rate_monotone_in_eps():
    vals = [analytic.ergodic_rate_bh(DEFAULTS.with_overrides(epsilon=e)).integral_value for e in (0.1, 0.4, 0.8)]
    assert vals[0] > vals[1] > vals[2] > 0.0


def test_rate_requires_alpha4():
    with pytest.raises(ValueError, match="alpha_i"):
        analytic.ergodic_rate_bh(DEFAULTS.with_overrides(alpha_i=3.5))
