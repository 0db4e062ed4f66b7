"""Numerically robust special functions behind the analytic formulas.

Everything here is a pure function, reentrant, and safe for concurrent
calls. Tolerances are fixed at module level: 1e-12 relative for series,
1e-10 absolute for quadrature.
"""

import math

import numpy as np
from scipy.integrate import quad

SERIES_RTOL = 1e-12
QUAD_ATOL = 1e-10

# Power series loses usefulness past this argument; switch to the scaled
# asymptotic expansion there.
_I0_SERIES_CUTOFF = 30.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its error target.

    Carries the achieved error estimate in ``achieved``.
    """

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error {achieved:.3e})")
        self.achieved = achieved


def _i0_series(x: float) -> float:
    # sum_{t>=0} (x/2)^(2t) / (t!)^2, stable for x <= ~30
    total = 1.0
    term = 1.0
    t = 0
    z = 0.25 * x * x
    while True:
        t += 1
        term *= z / (t * t)
        total += term
        if term <= SERIES_RTOL * total:
            return total


def _i0e_asymptotic(x: float) -> float:
    # e^-x I0(x) ~ (2 pi x)^(-1/2) sum_k prod_{j<=k}(2j-1)^2 / (k! (8x)^k)
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= (2 * k - 1) ** 2 / (8.0 * x * k)
        total += term
        if term <= SERIES_RTOL * total or k > 40:
            break
    return total / math.sqrt(2.0 * math.pi * x)


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero, for x >= 0."""
    if x < 0:
        raise ValueError(f"bessel_i0 requires x >= 0, got {x}")
    if x < _I0_SERIES_CUTOFF:
        return _i0_series(x)
    if x > 709.0:
        raise OverflowError(f"bessel_i0({x}) exceeds double range; use bessel_i0e")
    return math.exp(x) * _i0e_asymptotic(x)


def bessel_i0e(x: float) -> float:
    """Exponentially scaled variant e^-x I0(x); safe for any x >= 0."""
    if x < 0:
        raise ValueError(f"bessel_i0e requires x >= 0, got {x}")
    if x < _I0_SERIES_CUTOFF:
        return math.exp(-x) * _i0_series(x)
    return _i0e_asymptotic(x)


def gamma_ratio_signed_log(a: float, n: int):
    """Falling factorial a(a-1)...(a-n+1) as (sign, log magnitude).

    sign is 0 exactly when some factor a-k is zero, i.e. when the
    reciprocal Gamma in Gamma(a+1)/Gamma(a-n+1) sits on a pole.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if a < 0:
        raise ValueError(f"a must be >= 0, got {a}")
    sign = 1
    logmag = 0.0
    for k in range(int(n)):
        f = a - k
        if f == 0.0:
            return 0, float("-inf")
        if f < 0.0:
            sign = -sign
            f = -f
        logmag += math.log(f)
    return sign, logmag


def gamma_ratio(a: float, n: int) -> float:
    """Gamma(a+1)/Gamma(a-n+1) for a >= 0 and integer n >= 0.

    Computed as the n-term falling factorial in log magnitude, which keeps
    the pole-zero rule exact (returns 0.0 exactly when a-n+1 is a
    non-positive integer) and avoids Gamma cancellation.
    """
    sign, logmag = gamma_ratio_signed_log(a, n)
    if sign == 0:
        return 0.0
    if logmag > 709.0:
        raise OverflowError(f"gamma_ratio({a}, {n}) exceeds double range")
    return sign * math.exp(logmag)


def rho_quadrature(theta: float, alpha: float) -> float:
    """theta^(2/alpha) * integral_{theta^(-2/alpha)}^inf dx/(1 + x^(alpha/2))."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if alpha <= 2:
        raise ValueError(f"alpha must be > 2, got {alpha}")
    scale = theta ** (2.0 / alpha)
    lower = 1.0 / scale
    half = alpha / 2.0
    val, err = quad(
        lambda x: 1.0 / (1.0 + x**half),
        lower,
        np.inf,
        epsabs=QUAD_ATOL * 1e-2,
        epsrel=1e-12,
        limit=200,
    )
    if err * scale > QUAD_ATOL:
        raise QuadratureError(f"rho({theta}, {alpha}) quadrature did not converge", err * scale)
    return scale * val


def rho(theta: float, alpha: float) -> float:
    """Interference exclusion factor in the serving-cell Laplace transform.

    Uses the closed form sqrt(theta)*(pi/2 - atan(1/sqrt(theta))) at
    alpha = 4, adaptive quadrature of the defining integral otherwise.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if alpha <= 2:
        raise ValueError(f"alpha must be > 2, got {alpha}")
    if alpha == 4.0:
        s = math.sqrt(theta)
        return s * (math.pi / 2.0 - math.atan(1.0 / s))
    return rho_quadrature(theta, alpha)


def beta_delta(delta: float) -> float:
    """(2 pi / delta) / sin(2 pi / delta), defined for delta > 2."""
    if delta <= 2:
        raise ValueError(f"beta_delta has a pole at delta = 2 and requires delta > 2, got {delta}")
    x = 2.0 * math.pi / delta
    return x / math.sin(x)


def marcum_q1(a: float, b):
    """First-order Marcum Q, the noncentral-chi-square (2 dof) CCDF kernel.

    Q1(a, b) = P(X > b^2) with X = (a + N1)^2 + N2^2, N i.i.d. standard
    normal. Evaluated as the Poisson mixture of Erlang tails

        Q1(a, b) = sum_j e^-u u^j / j! * e^-v sum_{m<=j} v^m / m!

    with u = a^2/2, v = b^2/2; all terms positive, truncated when the
    remaining Poisson mass drops below 1e-15 (well inside the 1e-10
    absolute target). ``b`` may be a scalar or ndarray.

    With the unit-mean Rician gain normalization (scattered variance 1/2),
    the gain CCDF is P(h > y) = Q1(sqrt(2K), sqrt(2y)).
    """
    if a < 0:
        raise ValueError(f"marcum_q1 requires a >= 0, got {a}")
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0):
        raise ValueError("marcum_q1 requires b >= 0")
    scalar = b_arr.ndim == 0
    v = 0.5 * b_arr * b_arr
    u = 0.5 * a * a
    if u == 0.0:
        out = np.exp(-v)
        return float(out) if scalar else out
    if u > 700.0:
        raise ValueError(f"marcum_q1 unsupported for a^2/2 > 700, got a={a}")

    ev = np.exp(-v)
    cdf_term = np.array(ev, copy=True)   # e^-v v^j / j!
    inner = np.array(ev, copy=True)      # e^-v sum_{m<=j} v^m / m!
    pois = math.exp(-u)                  # e^-u u^j / j!
    pois_mass = pois
    total = pois * inner
    j_max = int(u + 60.0 * math.sqrt(u) + 200.0)
    for j in range(1, j_max + 1):
        pois *= u / j
        pois_mass += pois
        cdf_term *= v / j
        inner += cdf_term
        total += pois * inner
        if (1.0 - pois_mass) <= 1e-15:
            break
    # complete with the leftover Poisson mass (inner is increasing in j, so
    # this under-corrects by at most the 1e-15 leftover itself)
    total += (1.0 - pois_mass) * inner
    out = np.where(v == 0.0, 1.0, np.clip(total, 0.0, 1.0))
    return float(out) if scalar else out
