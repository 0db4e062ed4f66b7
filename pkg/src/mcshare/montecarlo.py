"""Independent stochastic network simulator.

Realizes Poisson deployments around a tagged vehicle cell at the window
center, draws per-link fading, evaluates both link SIRs, and estimates
every analytic quantity for cross-validation.

Reproducibility contract: every estimator output is a pure function of
(seed, params, grid, n_runs). Realization i always consumes its own RNG
substream derived from the master seed by a counter-based split, and
per-chunk partial results are reduced in fixed chunk order, so results are
bit-identical regardless of thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import L_UNIFORM_MIN, SystemParams
from .specialfn import marcum_q1

_CHUNK = 250
_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class Deployment:
    """One Poisson realization seen from the tagged cell at the origin."""

    serving_distance: float
    interferer_distances: np.ndarray
    window_half_width: float
    redraws: int = 0


@dataclass(frozen=True)
class FadingDraw:
    """Per-link channel gains for one realization.

    Backhaul-side gains (serving, interferers, access-antenna leakage) are
    unit-mean exponentials; access-link interferer gains are fresh
    exponentials independent of the backhaul draws; the access-link user
    channel is Rician with mean K+1.
    """

    h_serving: float
    h_interferers: np.ndarray
    h_al_to_bh: float
    h_al_interferers: np.ndarray
    h_al: float
    l_draw: float


@dataclass(frozen=True)
class SuccessEstimate:
    p_hat: float
    n: int
    ci95_halfwidth: float


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    n: int
    ci95_halfwidth: float


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based RNG substream: stream i mixes (seed, i), order-free."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def sample_ppp(lam: float, half_width: float, rng: np.random.Generator):
    """Homogeneous PPP on the square [-w, w]^2.

    Returns (points, redraws); empty draws are redrawn so at least one
    station always exists, with the redraw count recorded.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if half_width <= 0:
        raise ValueError(f"half_width must be > 0, got {half_width}")
    area = (2.0 * half_width) ** 2
    redraws = 0
    while True:
        n = rng.poisson(lam * area)
        if n > 0:
            break
        redraws += 1
    pts = rng.uniform(-half_width, half_width, size=(int(n), 2))
    return pts, redraws


def realize_network(params: SystemParams, rng: np.random.Generator) -> Deployment:
    """Tagged cell at the window center, served by the nearest station."""
    pts, redraws = sample_ppp(params.lambda_c, params.area_half_width, rng)
    dists = np.hypot(pts[:, 0], pts[:, 1])
    i_min = int(np.argmin(dists))
    serving = float(dists[i_min])
    interferers = np.delete(dists, i_min)
    return Deployment(
        serving_distance=serving,
        interferer_distances=interferers,
        window_half_width=params.area_half_width,
        redraws=redraws,
    )


def sample_rician_gain(k_factor: float, rng: np.random.Generator, size=None):
    """Rician power gain h = (sqrt(K) + X)^2 + Y^2, X,Y ~ N(0, 1/2).

    Scattered power 1, line-of-sight power K, so E[h] = K + 1; K = 0
    collapses to the unit-mean exponential (Rayleigh power).
    """
    if k_factor < 0:
        raise ValueError(f"k_factor must be >= 0, got {k_factor}")
    x = rng.normal(0.0, _SQRT_HALF, size)
    y = rng.normal(0.0, _SQRT_HALF, size)
    los = math.sqrt(k_factor)
    return (los + x) ** 2 + y**2


def _draw_l(params: SystemParams, rng: np.random.Generator) -> float:
    if params.l_mode == "uniform":
        return float(rng.uniform(L_UNIFORM_MIN, params.l))
    return params.l


def draw_fading(deployment: Deployment, params: SystemParams, rng: np.random.Generator) -> FadingDraw:
    """All channel gains for one realization, in a fixed draw order."""
    m = deployment.interferer_distances.size
    h_serving = float(rng.exponential())
    h_interferers = rng.exponential(size=m)
    h_al_to_bh = float(rng.exponential())
    h_al_interferers = rng.exponential(size=m + 1)  # serving station first
    h_al = float(sample_rician_gain(params.k_factor, rng))
    l_draw = _draw_l(params, rng)
    return FadingDraw(
        h_serving=h_serving,
        h_interferers=h_interferers,
        h_al_to_bh=h_al_to_bh,
        h_al_interferers=h_al_interferers,
        h_al=h_al,
        l_draw=l_draw,
    )


def sir_bh(deployment: Deployment, fading: FadingDraw, params: SystemParams) -> float:
    """Backhaul SIR: serving power over macro interference plus the
    penetration-attenuated own access-link leakage. Empty interference
    yields an infinite-SIR sentinel so success counting stays defined."""
    alpha = params.alpha_i
    num = params.p_c_watts * deployment.serving_distance**-alpha * fading.h_serving
    i_c = params.p_c_watts * float(
        np.dot(deployment.interferer_distances**-alpha, fading.h_interferers)
    )
    i_o = params.p_o_watts * params.x_d**-alpha * fading.h_al_to_bh
    denom = i_c + params.epsilon * i_o
    if denom == 0.0:
        return math.inf
    return num / denom


def sir_al(deployment: Deployment, fading: FadingDraw, params: SystemParams) -> float:
    """Access-link SIR: the in-vehicle user hears every macro station
    (serving included) attenuated once by the penetration factor."""
    num = params.p_o_watts * fading.l_draw**-params.alpha_o * fading.h_al
    all_d = np.concatenate(([deployment.serving_distance], deployment.interferer_distances))
    i_c = params.p_c_watts * float(np.dot(all_d**-params.alpha_i, fading.h_al_interferers))
    denom = params.epsilon * i_c
    if denom == 0.0:
        return math.inf
    return num / denom


_SIR_FUNCS = {"bh": sir_bh, "al": sir_al}


def _resolve_run_args(params, n_runs, seed):
    n = params.n_runs if n_runs is None else int(n_runs)
    s = params.seed if seed is None else int(seed)
    if n < 1:
        raise ValueError(f"n_runs must be >= 1, got {n}")
    return n, s


def _chunks(n):
    return [range(start, min(start + _CHUNK, n)) for start in range(0, n, _CHUNK)]


def _map_chunks(fn, chunks, threads):
    if threads <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def estimate_success(link: str, theta, params: SystemParams, n_runs=None, seed=None, threads: int = 1):
    """Empirical P(SIR > theta) for every threshold in the grid.

    One deployment + fading draw serves all thresholds. Returns
    (estimates, redraws) with one SuccessEstimate per grid point and the
    total empty-draw redraw count.
    """
    if link not in _SIR_FUNCS:
        raise ValueError(f"link must be 'bh' or 'al', got {link!r}")
    sir_fn = _SIR_FUNCS[link]
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    n, base_seed = _resolve_run_args(params, n_runs, seed)

    def run_chunk(chunk):
        counts = np.zeros(theta_arr.size, dtype=np.int64)
        redraws = 0
        for i in chunk:
            rng = substream(base_seed, i)
            dep = realize_network(params, rng)
            fad = draw_fading(dep, params, rng)
            s = sir_fn(dep, fad, params)
            counts += s > theta_arr
            redraws += dep.redraws
        return counts, redraws

    counts = np.zeros(theta_arr.size, dtype=np.int64)
    redraws = 0
    for c, r in _map_chunks(run_chunk, _chunks(n), threads):
        counts += c
        redraws += r

    estimates = []
    for k in counts:
        p = float(k) / n
        estimates.append(SuccessEstimate(p_hat=p, n=n, ci95_halfwidth=1.96 * math.sqrt(p * (1.0 - p) / n)))
    return estimates, redraws


def estimate_ergodic_rate(params: SystemParams, n_runs=None, seed=None, threads: int = 1):
    """Sample mean of ln(1 + backhaul SIR) with a standard-error CI."""
    n, base_seed = _resolve_run_args(params, n_runs, seed)

    def run_chunk(chunk):
        total = 0.0
        total_sq = 0.0
        redraws = 0
        for i in chunk:
            rng = substream(base_seed, i)
            dep = realize_network(params, rng)
            fad = draw_fading(dep, params, rng)
            v = math.log1p(sir_bh(dep, fad, params))
            total += v
            total_sq += v * v
            redraws += dep.redraws
        return total, total_sq, redraws

    total = 0.0
    total_sq = 0.0
    redraws = 0
    for t, tsq, r in _map_chunks(run_chunk, _chunks(n), threads):
        total += t
        total_sq += tsq
        redraws += r
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    ci = 1.96 * math.sqrt(var / n)
    return MeanEstimate(mean=mean, n=n, ci95_halfwidth=ci), redraws


def p2_hybrid(theta, params: SystemParams, n_samples: int, seed=None, threads: int = 1):
    """Semi-analytic access-link oracle: exact Rician CCDF averaged over
    sampled interference.

    For each sampled deployment the normalized interference
    I' = I_c / (P_o l^-alpha_o) is formed from fresh exponential gains, and
    Q1(sqrt(2K), sqrt(2 theta eps I')) is averaged over samples for every
    threshold. Ground-truth arbiter between the two series variants.
    Returns (estimates, redraws), one MeanEstimate per grid point.
    """
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    n, base_seed = _resolve_run_args(params, n_samples, seed)
    a = math.sqrt(2.0 * params.k_factor)

    def run_chunk(chunk):
        i_prime = np.empty(len(chunk))
        redraws = 0
        for idx, i in enumerate(chunk):
            rng = substream(base_seed, i)
            pts, rd = sample_ppp(params.lambda_c, params.area_half_width, rng)
            redraws += rd
            dists = np.hypot(pts[:, 0], pts[:, 1])
            gains = rng.exponential(size=dists.size)
            i_c = params.p_c_watts * float(np.dot(dists**-params.alpha_i, gains))
            l_val = _draw_l(params, rng)
            i_prime[idx] = i_c / (params.p_o_watts * l_val**-params.alpha_o)
        sums = np.empty(theta_arr.size)
        sums_sq = np.empty(theta_arr.size)
        for t_idx, th in enumerate(theta_arr):
            vals = marcum_q1(a, np.sqrt(2.0 * th * params.epsilon * i_prime))
            sums[t_idx] = vals.sum()
            sums_sq[t_idx] = np.dot(vals, vals)
        return sums, sums_sq, redraws

    sums = np.zeros(theta_arr.size)
    sums_sq = np.zeros(theta_arr.size)
    redraws = 0
    for s, ssq, r in _map_chunks(run_chunk, _chunks(n), threads):
        sums += s
        sums_sq += ssq
        redraws += r

    estimates = []
    for t_idx in range(theta_arr.size):
        mean = sums[t_idx] / n
        var = max(sums_sq[t_idx] / n - mean * mean, 0.0) * n / max(n - 1, 1)
        estimates.append(MeanEstimate(mean=mean, n=n, ci95_halfwidth=1.96 * math.sqrt(var / n)))
    return estimates, redraws
