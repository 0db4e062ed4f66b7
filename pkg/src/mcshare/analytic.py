"""Analytic performance formulas for the shared-spectrum mobile-cell links.

Covers the downlink-backhaul success probability (adaptive quadrature, two
independent evaluation paths), the downlink access-link success probability
(truncated triple series, plus a simplified variant), the interference
Laplace transforms, and the backhaul ergodic-rate double integral.

All functions are pure and reentrant; safe for data-parallel evaluation
over threshold grids.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .params import SystemParams
from .specialfn import QuadratureError, beta_delta, rho

# Absolute tail bound used when truncating the backhaul success integral.
P1_TAIL_BOUND = 1e-10
# Ergodic-rate absolute error target.
RATE_ATOL = 1e-6
# Loss-of-significance threshold for the access-link series.
CONDITION_LIMIT = 1e12


class SeriesConditionWarning(UserWarning):
    """Largest series term exceeds the result by more than CONDITION_LIMIT."""


@dataclass(frozen=True)
class P1Intermediates:
    """Factors of the backhaul success integrand plus the achieved error."""

    z_factor: float          # pi * lambda_c * (1 + rho(theta, alpha_i))
    y_factor: float          # epsilon * theta * (P_o/P_c) / x_d^alpha_i
    quadrature_error: float


@dataclass(frozen=True)
class P2Result:
    """Access-link series evaluation with conditioning diagnostics."""

    value: float             # clamped to [0, 1]
    raw_value: float         # pre-clamp series sum
    x_factor: float
    series_terms_used: tuple # (J, Q)
    largest_term: float
    ill_conditioned: bool


@dataclass(frozen=True)
class RateIntermediates:
    """Backhaul ergodic rate value with quadrature diagnostics."""

    f_factor: float          # (P_o/P_c) * epsilon / x_d^4
    integral_value: float    # nats/sec/Hz
    est_error: float


def laplace_ic(theta: float, r: float, params: SystemParams) -> float:
    """Laplace transform of the macro-cell interference seen by the
    backhaul antenna at serving distance r: exp(-pi r^2 lambda_c rho)."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    return math.exp(-math.pi * r * r * params.lambda_c * rho(theta, params.alpha_i))


def laplace_io(theta: float, r: float, params: SystemParams) -> float:
    """Laplace transform of the own access-link leakage into the backhaul:
    1 / (1 + eps * theta * (r/x_d)^alpha_i * P_o/P_c)."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    return 1.0 / (
        1.0 + params.epsilon * theta * (r / params.x_d) ** params.alpha_i * params.power_ratio
    )


def p1_intermediates(theta: float, params: SystemParams) -> tuple[float, float]:
    z = math.pi * params.lambda_c * (1.0 + rho(theta, params.alpha_i))
    y = params.epsilon * theta * params.power_ratio / params.x_d**params.alpha_i
    return z, y


def p1_success_detailed(theta: float, params: SystemParams):
    """Backhaul success probability by truncated adaptive quadrature.

    Integrates 2 pi lambda_c r exp(-Z r^2) / (1 + Y r^alpha_i) over
    [0, R_cut], with R_cut chosen so the dropped Gaussian tail is below
    P1_TAIL_BOUND. Returns (probability, P1Intermediates).
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    z, y = p1_intermediates(theta, params)
    alpha = params.alpha_i
    two_pi_lam = 2.0 * math.pi * params.lambda_c

    # tail beyond R: 2 pi lam int_R^inf r e^{-Z r^2} dr = (pi lam / Z) e^{-Z R^2}
    r_cut = math.sqrt(25.0 / z)

    def integrand(r):
        return r * math.exp(-z * r * r) / (1.0 + y * r**alpha)

    val, err = quad(integrand, 0.0, r_cut, epsabs=1e-13, epsrel=1e-12, limit=200)
    total_err = two_pi_lam * err + P1_TAIL_BOUND
    if total_err > 1e-8:
        raise QuadratureError(f"p1 quadrature did not converge at theta={theta}", total_err)
    p = min(max(two_pi_lam * val, 0.0), 1.0)
    return p, P1Intermediates(z_factor=z, y_factor=y, quadrature_error=total_err)


def p1_success(theta: float, params: SystemParams) -> float:
    """Backhaul success probability P(SIR > theta) on the downlink backhaul."""
    return p1_success_detailed(theta, params)[0]


def p1_success_tan(theta: float, params: SystemParams) -> float:
    """Backhaul success probability via the tangent substitution r = tan(pi d/2).

    Independent evaluation path on d in (0, 1); must agree with p1_success
    to better than 1e-8.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    z, y = p1_intermediates(theta, params)
    alpha = params.alpha_i
    pi_sq_lam = math.pi**2 * params.lambda_c

    def integrand(d):
        t = math.tan(0.5 * math.pi * d)
        zt2 = z * t * t
        if zt2 > 745.0:
            return 0.0
        sec2 = 1.0 + t * t
        return sec2 * t * math.exp(-zt2) / (1.0 + y * t**alpha)

    # integrand peaks near d* where tan = 1/sqrt(Z); seed the subdivision
    d_star = 2.0 / math.pi * math.atan(1.0 / math.sqrt(z))
    pts = sorted({d_star, min(0.999999, 3.0 * d_star)})
    val, err = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200, points=pts)
    if pi_sq_lam * err > 1e-8:
        raise QuadratureError(f"p1 tan-path quadrature did not converge at theta={theta}", pi_sq_lam * err)
    return min(max(pi_sq_lam * val, 0.0), 1.0)


def p1_closed_no_al(theta: float, params: SystemParams) -> float:
    """Backhaul success probability in the zero-leakage limit (Y = 0).

    Exactly 1/(1 + rho(theta, alpha_i)); the density lambda_c cancels.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    return 1.0 / (1.0 + rho(theta, params.alpha_i))


def x_factor(params: SystemParams) -> float:
    """Composite access-link interference factor

    lambda_c pi (eps l^alpha_o)^(2/alpha_i) (P_c/P_o)^(2/alpha_i) beta(alpha_i)
    """
    e = 2.0 / params.alpha_i
    inv_ratio = 1.0 / params.power_ratio  # P_c/P_o
    return (
        params.lambda_c
        * math.pi
        * (params.epsilon * params.l**params.alpha_o) ** e
        * inv_ratio**e
        * beta_delta(params.alpha_i)
    )


@lru_cache(maxsize=16)
def _falling_factorial_table(alpha: float, j_trunc: int, q_trunc: int):
    """Signed-log table of fall(2q/alpha, n) for q <= Q, n <= J.

    Returns (sign, logmag) arrays of shape (Q+1, J+1). sign is 0 where the
    falling factorial is exactly zero (reciprocal-Gamma pole).
    """
    a = 2.0 * np.arange(q_trunc + 1) / alpha
    sgn = np.ones((q_trunc + 1, j_trunc + 1))
    logm = np.zeros((q_trunc + 1, j_trunc + 1))
    for n in range(1, j_trunc + 1):
        f = a - (n - 1)
        sgn[:, n] = np.where(f == 0.0, 0.0, sgn[:, n - 1] * np.sign(f))
        with np.errstate(divide="ignore", invalid="ignore"):
            logm[:, n] = logm[:, n - 1] + np.log(np.abs(f))
    logm[sgn == 0.0] = -np.inf
    return sgn, logm


def _poisson_tail_log(k_factor: float, j_trunc: int):
    """log of tail(n) = sum_{j=n..J} e^-K K^j / j!, for n = 0..J."""
    if k_factor == 0.0:
        tail = np.zeros(j_trunc + 1)
        tail[0] = 1.0
    else:
        j = np.arange(j_trunc + 1)
        logp = -k_factor + j * math.log(k_factor) - gammaln(j + 1)
        pmf = np.exp(logp)
        tail = np.cumsum(pmf[::-1])[::-1]
    with np.errstate(divide="ignore"):
        return np.log(tail)


def p2_series_detailed(theta: float, params: SystemParams) -> P2Result:
    """Access-link success probability from the full truncated series.

    Evaluates, in log-magnitude + sign form,

        p2 = sum_{n=0..J} sum_{q=0..Q} (-1)^n (-1)^q
             * tail_K(n)/n! * w^q/q! * fall(2q/alpha_i, n)

    with w = X * theta^(2/alpha_i) and tail_K(n) the Poisson(K) mass on
    j in [n, J] (the j/m double sum regrouped over n = j - m). Pole terms
    of the Gamma ratio contribute exactly zero. The value is clamped to
    [0, 1]; the raw sum is kept as a diagnostic.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    jt, qt = params.j_trunc, params.q_trunc
    xf = x_factor(params)
    w = xf * theta ** (2.0 / params.alpha_i)

    sgn_f, log_f = _falling_factorial_table(params.alpha_i, jt, qt)
    q = np.arange(qt + 1)
    if w > 0.0:
        log_wq = q * math.log(w) - gammaln(q + 1)
    else:
        log_wq = np.full(qt + 1, -np.inf)
        log_wq[0] = 0.0
    n = np.arange(jt + 1)
    log_coef_n = _poisson_tail_log(params.k_factor, jt) - gammaln(n + 1)

    log_terms = log_wq[:, None] + log_f + log_coef_n[None, :]
    signs = np.where(q[:, None] % 2 == 0, 1.0, -1.0) * np.where(n[None, :] % 2 == 0, 1.0, -1.0)
    signs = signs * sgn_f
    with np.errstate(over="raise"):
        terms = signs * np.exp(log_terms)
    raw = float(terms.sum())
    largest = float(np.abs(terms).max())
    ill = largest > CONDITION_LIMIT * max(abs(raw), np.finfo(float).tiny)
    if ill:
        warnings.warn(
            f"p2 series loss of significance at theta={theta}: largest term "
            f"{largest:.3e} vs sum {raw:.3e}",
            SeriesConditionWarning,
            stacklevel=2,
        )
    return P2Result(
        value=min(max(raw, 0.0), 1.0),
        raw_value=raw,
        x_factor=xf,
        series_terms_used=(jt, qt),
        largest_term=largest,
        ill_conditioned=ill,
    )


def p2_series(theta: float, params: SystemParams) -> float:
    """Access-link success probability P(SIR > theta), clamped to [0, 1]."""
    return p2_series_detailed(theta, params).value


def p2_series_simplified(theta: float, params: SystemParams) -> float:
    """The simplified series variant, evaluated verbatim.

    exp(-X theta^(2/alpha_i)) * sum_{n,q} (-1)^n tail_K(n)/n!
        * fall(2q/alpha_i, n)

    Reproduction diagnostic only: the q-sum here carries no X^q/q! weights,
    diverges with Q at n = 0, and is reported unclamped for comparison
    against the full series and the Monte Carlo oracles.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    jt, qt = params.j_trunc, params.q_trunc
    w = x_factor(params) * theta ** (2.0 / params.alpha_i)
    sgn_f, log_f = _falling_factorial_table(params.alpha_i, jt, qt)
    n = np.arange(jt + 1)
    log_coef_n = _poisson_tail_log(params.k_factor, jt) - gammaln(n + 1)
    with np.errstate(over="ignore"):
        g = (sgn_f * np.exp(log_f)).sum(axis=0)  # sum over q per n
        series = np.where(n % 2 == 0, 1.0, -1.0) * np.exp(log_coef_n) * g
    return float(math.exp(-w) * series.sum())


def ergodic_rate_bh(params: SystemParams) -> RateIntermediates:
    """Backhaul ergodic rate E[ln(1 + SIR)] in nats/sec/Hz.

    Adaptive 2-D quadrature over (g, sigma) in (0, 1)^2 of the rate
    integrand (valid for alpha_i = 4 only; the integrand hardcodes the
    alpha = 4 closed form of rho and x_d^4). The inner integral carries an
    exponential boundary layer of width ~1/(1+rho) at sigma -> 1, so
    subdivision points are seeded there; the integrand is extended by
    continuity to 0 at the g and sigma edges.
    """
    if params.alpha_i != 4.0:
        raise ValueError(f"ergodic_rate_bh requires alpha_i = 4, got {params.alpha_i}")
    f_factor = params.power_ratio * params.epsilon / params.x_d**4
    lam_pi_sq = (params.lambda_c * math.pi) ** 2

    inner_err_scaled = 0.0

    def inner(g):
        nonlocal inner_err_scaled
        t = 1.0 / g - 1.0
        if t > 700.0:
            return 0.0
        theta = math.expm1(t)
        if theta > 0.0:
            s = math.sqrt(theta)
            r = s * (math.pi / 2.0 - math.atan(1.0 / s))
        else:
            r = 0.0
        c = f_factor * theta / lam_pi_sq

        def f(sigma):
            u = 1.0 / sigma - 1.0
            logv = -u * (1.0 + r) - 2.0 * math.log(sigma) - math.log1p(c * u * u)
            return math.exp(logv) if logv > -700.0 else 0.0

        pts = sorted({max(1e-12, 1.0 - k / (1.0 + r)) for k in (1.0, 5.0, 20.0, 60.0)} - {1.0})
        val, err = quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=400, points=pts)
        inner_err_scaled = max(inner_err_scaled, err / (g * g))
        return val / (g * g)

    val, outer_err = quad(inner, 0.0, 1.0, epsabs=1e-9, epsrel=1e-9, limit=400)
    est_error = outer_err + inner_err_scaled
    if est_error > RATE_ATOL:
        raise QuadratureError("ergodic rate quadrature exceeded its error target", est_error)
    return RateIntermediates(f_factor=f_factor, integral_value=val, est_error=est_error)
