"""System parameters, units and validation.

All internal math runs in linear units (watts, meters, linear SIR ratios);
dB values appear only at I/O boundaries (config files, CLI flags, CSV
columns). Parameter sets are immutable after construction and safe to share
across threads.
"""

import math
from dataclasses import dataclass, asdict, replace
from types import SimpleNamespace

import numpy as np

# Lower bound of the optional uniform antenna-to-user distance mode, meters.
L_UNIFORM_MIN = 0.5


class ParameterError(ValueError):
    """One or more parameter invariants violated.

    ``violations`` holds one human-readable message per violated invariant,
    each naming the offending field and the bound.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def dbm_to_linear(p_dbm: float) -> float:
    """Convert a dBm power level to watts: 10^((p_dbm - 30)/10)."""
    if not math.isfinite(p_dbm):
        raise ValueError(f"power must be finite, got {p_dbm}")
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def linear_to_dbm(p_watts: float) -> float:
    """Convert watts to dBm. Inverse of dbm_to_linear."""
    if not (p_watts > 0.0):
        raise ValueError(f"power must be positive, got {p_watts}")
    return 10.0 * math.log10(p_watts) + 30.0


def power_ratio(p_c_dbm: float, p_o_dbm: float) -> float:
    """Linear transmit-power ratio P_o/P_c from the two dBm levels.

    Only this ratio enters the analytic formulas, so it is computed from
    the dB difference directly (shift-invariant in the common offset).
    """
    return 10.0 ** ((p_o_dbm - p_c_dbm) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """All physical and run-control constants for one scenario.

    lambda_c        macro-cell density, points/m^2
    p_c_dbm         macro-cell transmit power, dBm
    p_o_dbm         in-vehicle access-link transmit power, dBm
    alpha_i         NLOS pathloss exponent (backhaul and interfering links)
    alpha_o         LOS pathloss exponent (in-vehicle access link)
    epsilon         vehicle penetration factor, linear in (0, 1]; 0 is
                    accepted on construction only for analytic limit studies
    x_d             backhaul-antenna to access-antenna separation, m
    l               access-antenna to user distance, m (table maximum)
    l_mode          "fixed" uses l as-is; "uniform" draws U[0.5, l] per
                    realization in the simulator
    k_factor        Rician K of the access link, linear (0 = Rayleigh)
    j_trunc/q_trunc series truncation depths for the access-link series
    area_half_width half side-length of the simulation window, m
    n_runs          Monte Carlo realization count
    seed            64-bit master seed for the counter-based RNG substreams
    """

    lambda_c: float = 6e-6
    p_c_dbm: float = 45.0
    p_o_dbm: float = 3.0
    alpha_i: float = 4.0
    alpha_o: float = 3.5
    epsilon: float = 0.1
    x_d: float = 5.0
    l: float = 8.0
    l_mode: str = "fixed"
    k_factor: float = 2.0
    j_trunc: int = 70
    q_trunc: int = 70
    area_half_width: float = 10_000.0
    n_runs: int = 5_000
    seed: int = 20180901

    def __post_init__(self):
        problems = _invariant_violations(self, allow_epsilon_zero=True)
        if problems:
            raise ParameterError(problems)

    @property
    def p_c_watts(self) -> float:
        return dbm_to_linear(self.p_c_dbm)

    @property
    def p_o_watts(self) -> float:
        return dbm_to_linear(self.p_o_dbm)

    @property
    def power_ratio(self) -> float:
        """P_o/P_c, linear."""
        return power_ratio(self.p_c_dbm, self.p_o_dbm)

    def with_overrides(self, **kwargs) -> "SystemParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SirThresholdGrid:
    """Inclusive dB grid of SIR thresholds."""

    theta_db_min: float = -20.0
    theta_db_max: float = 20.0
    theta_db_step: float = 1.0

    def __post_init__(self):
        if not (self.theta_db_step > 0):
            raise ParameterError([f"theta_db_step must be > 0, got {self.theta_db_step}"])
        if self.theta_db_min > self.theta_db_max:
            raise ParameterError(
                [f"theta_db_min ({self.theta_db_min}) must be <= theta_db_max ({self.theta_db_max})"]
            )

    def theta_db(self) -> np.ndarray:
        n = int(round((self.theta_db_max - self.theta_db_min) / self.theta_db_step))
        return self.theta_db_min + self.theta_db_step * np.arange(n + 1)

    def theta_linear(self) -> np.ndarray:
        return 10.0 ** (self.theta_db() / 10.0)


# Field -> type coercion for config/CLI input.
_INT_FIELDS = {"j_trunc", "q_trunc", "n_runs", "seed"}
_STR_FIELDS = {"l_mode"}
_ALL_FIELDS = set(SystemParams.__dataclass_fields__)


def _invariant_violations(p, allow_epsilon_zero: bool) -> list:
    v = []
    if not (p.lambda_c > 0):
        v.append(f"lambda_c must be > 0, got {p.lambda_c}")
    if not (math.isfinite(p.p_c_dbm) and math.isfinite(p.p_o_dbm)):
        v.append("p_c_dbm and p_o_dbm must be finite")
    eps_low = (p.epsilon >= 0.0) if allow_epsilon_zero else (p.epsilon > 0.0)
    if not (eps_low and p.epsilon <= 1.0):
        lo = "0 <=" if allow_epsilon_zero else "0 <"
        v.append(f"epsilon must satisfy {lo} epsilon <= 1, got {p.epsilon}")
    if not (p.alpha_i > 2):
        v.append(f"alpha_i must be > 2 (interference integral convergence), got {p.alpha_i}")
    if not (p.alpha_o > 0):
        v.append(f"alpha_o must be > 0, got {p.alpha_o}")
    if not (p.x_d > 0):
        v.append(f"x_d must be > 0, got {p.x_d}")
    if not (p.l > 0):
        v.append(f"l must be > 0, got {p.l}")
    if p.l_mode not in ("fixed", "uniform"):
        v.append(f"l_mode must be 'fixed' or 'uniform', got {p.l_mode!r}")
    if not (p.k_factor >= 0):
        v.append(f"k_factor must be >= 0, got {p.k_factor}")
    if not (p.j_trunc >= 1):
        v.append(f"j_trunc must be >= 1, got {p.j_trunc}")
    if not (p.q_trunc >= 1):
        v.append(f"q_trunc must be >= 1, got {p.q_trunc}")
    if p.lambda_c > 0:
        guard = 10.0 / math.sqrt(math.pi * p.lambda_c)
        if not (p.area_half_width >= guard):
            v.append(
                f"area_half_width must be >= 10/sqrt(pi*lambda_c) = {guard:.1f} m "
                f"(edge-effect guard), got {p.area_half_width}"
            )
    if not (p.n_runs >= 1):
        v.append(f"n_runs must be >= 1, got {p.n_runs}")
    if not (0 <= p.seed < 2**64):
        v.append(f"seed must be a 64-bit unsigned integer, got {p.seed}")
    return v


def _coerce(key: str, value):
    if key in _STR_FIELDS:
        return str(value)
    if key in _INT_FIELDS:
        f = float(value)
        i = int(f)
        if i != f:
            raise ParameterError([f"{key} must be an integer, got {value!r}"])
        return i
    return float(value)


def validate(raw: dict) -> SystemParams:
    """Build validated parameters from raw key/value input.

    Unset fields take the table defaults. Unknown keys and every violated
    invariant are reported together (field name plus bound). This is the
    gate for config-file and --set input, so it enforces the strict model
    bound 0 < epsilon <= 1; construct SystemParams directly for the
    epsilon = 0 analytic limit.
    """
    problems = []
    values = {}
    for key, value in raw.items():
        if key not in _ALL_FIELDS:
            problems.append(f"unknown parameter {key!r}")
            continue
        try:
            values[key] = _coerce(key, value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                problems.extend(exc.violations)
            else:
                problems.append(f"{key} must be numeric, got {value!r}")
    if problems:
        raise ParameterError(problems)

    defaults = {f.name: f.default for f in SystemParams.__dataclass_fields__.values()}
    defaults.update(values)
    problems = _invariant_violations(SimpleNamespace(**defaults), allow_epsilon_zero=False)
    if problems:
        raise ParameterError(problems)
    return SystemParams(**defaults)


def load_config(path) -> dict:
    """Parse a flat key=value config file (UTF-8, '#' comments)."""
    raw = {}
    problems = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                problems.append(f"{path}:{lineno}: expected key=value, got {stripped!r}")
                continue
            key, value = stripped.split("=", 1)
            key = key.strip()
            if key in raw:
                problems.append(f"{path}:{lineno}: duplicate key {key!r}")
                continue
            raw[key] = value.strip()
    if problems:
        raise ParameterError(problems)
    return raw


def params_as_dict(params: SystemParams) -> dict:
    return asdict(params)


DEFAULTS = SystemParams()

# Full-scale profile: 40x40 km window, 10,000 realizations.
FULL_PROFILE = {"area_half_width": 20_000.0, "n_runs": 10_000}
