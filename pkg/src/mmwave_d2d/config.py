"""
Scenario description for a multi-band mm-wave cellular uplink with
underlay D2D pairs.

Everything in here is stored in linear SI units (W, m, Hz, users/m^2).
The JSON file layer uses mW, MHz and dB and is converted on load.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

__all__ = [
    "AntennaPattern",
    "ConfigError",
    "PowerVector",
    "ScenarioConfig",
    "ValidationReport",
    "db_to_linear",
    "effective_gain_pmf",
    "linear_to_db",
    "load_scenario",
    "scenario_from_dict",
    "scenario_hash",
    "scenario_to_dict",
    "table1_scenario",
    "validate_scenario",
]

TWO_PI = 2.0 * math.pi

# per-band fields: scalars are broadcast to length num_bands
BAND_FIELDS = (
    "bandwidth_per_band", "lambda_d", "lambda_c", "P_d_max_i",
    "R_d", "R_c", "T_d", "T_c", "theta_d", "theta_c",
)


class ConfigError(ValueError):
    """Raised when a scenario cannot be loaded or fails validation."""


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def _frozen_array(x) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AntennaPattern:
    """
    Sectored antenna: gain ``G_main`` inside a main lobe of width
    ``theta_bw`` (radians), ``g_side`` elsewhere. Both gains are linear.
    """

    G_main: float
    g_side: float
    theta_bw: float

    @classmethod
    def from_db(cls, G_main_db: float, g_side_db: float, theta_bw: float) -> "AntennaPattern":
        return cls(float(db_to_linear(G_main_db)), float(db_to_linear(g_side_db)), float(theta_bw))

    @property
    def G0(self) -> float:
        """Combined gain of a perfectly aligned link."""
        return self.G_main * self.G_main

    def problems(self) -> list[str]:
        out = []
        if not (0.0 < self.theta_bw < TWO_PI):
            out.append("antenna.theta_bw must lie in (0, 2*pi)")
        if not self.g_side > 0.0:
            out.append("antenna.g_side must be > 0")
        if self.G_main < self.g_side:
            out.append("antenna.G_main must be >= antenna.g_side")
        return out


def effective_gain_pmf(antenna: AntennaPattern) -> list[tuple[float, float]]:
    """
    Distribution of the combined transmit/receive gain seen from an
    interferer whose beam direction is uniform on [0, 2*pi).

    Returns
    -------
    list of (gain, probability)
        Ordered main/main, main/side, side/side.
    """
    theta = antenna.theta_bw
    if not (0.0 < theta < TWO_PI):
        raise ValueError(f"beamwidth must lie in (0, 2*pi), got {theta!r}")
    q = theta / TWO_PI
    G, g = antenna.G_main, antenna.g_side
    return [
        (G * G, q * q),
        (G * g, 2.0 * q * (1.0 - q)),
        (g * g, (1.0 - q) * (1.0 - q)),
    ]


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Full network description. Per-band quantities are 1-D arrays of length
    ``num_bands``; scalars passed to the constructor are broadcast.

    Construction never raises on physically inconsistent values, use
    :func:`validate_scenario` to get a list of problems.
    """

    num_bands: int
    bandwidth_per_band: Any
    lambda_d: Any
    lambda_c: Any
    P_c_total: float
    P_d_total: float
    P_d_max_i: Any
    P_cir: float
    R_d: Any
    R_c: Any
    T_d: Any
    T_c: Any
    theta_d: Any
    theta_c: Any
    antenna: AntennaPattern
    N0: float = 0.0
    alpha_L: float = 2.0
    alpha_N: float = 4.0
    beta: float = 0.45
    nakagami_m: int = 1
    # False: interferers use the desired link's exponent (formulas as printed).
    # True: each interferer class j uses its own exponent alpha_j.
    per_interferer_alpha: bool = False

    def __post_init__(self):
        for name in BAND_FIELDS:
            value = getattr(self, name)
            if np.ndim(value) == 0:
                value = np.full(max(int(self.num_bands), 0), float(value))
            object.__setattr__(self, name, _frozen_array(value))
        for name in ("P_c_total", "P_d_total", "P_cir", "N0", "alpha_L", "alpha_N", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def P_c_i(self) -> float:
        """Per-band cellular transmit power."""
        return self.P_c_total / self.num_bands

    @property
    def G0(self) -> float:
        return self.antenna.G0

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with fields replaced; ``antenna`` sub-fields may be given as
        ``G_main``, ``g_side`` or ``theta_bw``."""
        ant = {k: changes.pop(k) for k in ("G_main", "g_side", "theta_bw") if k in changes}
        if ant:
            changes["antenna"] = dataclasses.replace(changes.get("antenna", self.antenna), **ant)
        return dataclasses.replace(self, **changes)

    def band(self, i: int) -> dict:
        """Scalar view of band ``i`` (0-based)."""
        return {name: float(getattr(self, name)[i]) for name in BAND_FIELDS}

    def bands_identical(self, i: int, j: int) -> bool:
        return all(getattr(self, n)[i] == getattr(self, n)[j] for n in BAND_FIELDS)


@dataclass(frozen=True)
class PowerVector:
    """Per-band D2D transmit power in W."""

    p: Any

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen_array(self.p))

    def __len__(self):
        return len(self.p)

    def __iter__(self):
        return iter(self.p)

    def __getitem__(self, i):
        return self.p[i]

    @classmethod
    def uniform(cls, cfg: ScenarioConfig, value: float | None = None) -> "PowerVector":
        """Equal power on every band; defaults to the largest feasible equal split."""
        if value is None:
            value = min(cfg.P_d_total / cfg.num_bands, float(np.min(cfg.P_d_max_i)))
        return cls(np.full(cfg.num_bands, float(value)))

    def within_box(self, cfg: ScenarioConfig, tol: float = 0.0) -> bool:
        return bool(np.all(self.p >= -tol) and np.all(self.p <= cfg.P_d_max_i + tol))

    def within_budget(self, cfg: ScenarioConfig, tol: float = 0.0) -> bool:
        return bool(math.fsum(self.p) <= cfg.P_d_total + tol)

    def is_feasible_power(self, cfg: ScenarioConfig, tol: float = 0.0) -> bool:
        return len(self.p) == cfg.num_bands and self.within_box(cfg, tol) and self.within_budget(cfg, tol)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_scenario(cfg: ScenarioConfig) -> ValidationReport:
    """Collect every consistency problem in ``cfg``. Never raises."""
    rep = ValidationReport()
    v = rep.violations
    M = cfg.num_bands
    if not isinstance(M, (int, np.integer)) or M < 1:
        v.append("num_bands must be >= 1")
        return rep
    for name in BAND_FIELDS:
        arr = getattr(cfg, name)
        if arr.shape != (M,):
            v.append(f"vector length mismatch: {name} has length {arr.size}, expected {M}")
        elif not np.all(np.isfinite(arr)):
            v.append(f"{name} must be finite")
        elif np.any(arr < 0):
            v.append(f"{name} must be nonnegative")
    for name in ("P_c_total", "P_d_total", "P_cir", "N0", "beta"):
        x = getattr(cfg, name)
        if not (math.isfinite(x) and x >= 0):
            v.append(f"{name} must be finite and nonnegative")
    for name in ("T_d", "T_c"):
        arr = getattr(cfg, name)
        if arr.shape == (M,) and np.any(arr <= 0):
            v.append(f"{name} must be > 0 (linear)")
    for name in ("theta_d", "theta_c"):
        arr = getattr(cfg, name)
        if arr.shape == (M,) and np.any(arr > 1):
            v.append(f"{name} must lie in [0, 1]")
    for name in ("bandwidth_per_band", "R_d", "R_c"):
        arr = getattr(cfg, name)
        if arr.shape == (M,) and np.any(arr <= 0):
            v.append(f"{name} must be > 0")
    m = cfg.nakagami_m
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 1:
        v.append("nakagami_m must be an integer >= 1")
    elif m > 8:
        v.append("nakagami_m > 8 is not supported (alternating binomial sum loses precision)")
    if cfg.alpha_L < 2 or cfg.alpha_N < 2:
        v.append("path-loss exponents must be >= 2")
    elif cfg.alpha_N < cfg.alpha_L:
        rep.warnings.append("alpha_N < alpha_L: NLOS links decay slower than LOS links")
    if cfg.alpha_L == 2:
        rep.warnings.append("alpha_L = 2: LOS-branch interference integrals diverge, that branch contributes 0")
    v.extend(cfg.antenna.problems())
    return rep


# ---------------------------------------------------------------------------
# file layer

_FILE_BAND_UNITS = {
    # key: (file -> SI conversion)
    "bandwidth_per_band": lambda x: np.asarray(x, float) * 1e6,  # MHz
    "lambda_d": lambda x: np.asarray(x, float),
    "lambda_c": lambda x: np.asarray(x, float),
    "P_d_max_i": lambda x: np.asarray(x, float) * 1e-3,  # mW
    "R_d": lambda x: np.asarray(x, float),
    "R_c": lambda x: np.asarray(x, float),
    "T_d": db_to_linear,  # dB
    "T_c": db_to_linear,
    "theta_d": lambda x: np.asarray(x, float),
    "theta_c": lambda x: np.asarray(x, float),
}
_FILE_SCALAR_UNITS = {
    "P_c_total": 1e-3,  # mW
    "P_d_total": 1e-3,
    "P_cir": 1e-3,
    "N0": 1e-3,
    "alpha_L": 1.0,
    "alpha_N": 1.0,
    "beta": 1.0,
}


def scenario_from_dict(d: dict) -> ScenarioConfig:
    """
    Build a scenario from the file-layer dictionary (mW, MHz, dB).

    ``antenna`` holds ``G_main_db`` plus either ``g_side_db`` or
    ``g_side_linear``, and ``theta_bw`` in radians. ``P_c_i`` (mW) may be
    given instead of ``P_c_total``.
    """
    d = dict(d)
    known = set(BAND_FIELDS) | set(_FILE_SCALAR_UNITS) | {
        "num_bands", "antenna", "nakagami_m", "P_c_i", "per_interferer_alpha", "description",
    }
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
    try:
        M = d["num_bands"]
        if not isinstance(M, int) or isinstance(M, bool):
            raise ConfigError("num_bands must be an integer")
        kw: dict[str, Any] = {"num_bands": M}
        for key, conv in _FILE_BAND_UNITS.items():
            kw[key] = conv(d[key])
        if "P_c_total" in d and "P_c_i" in d:
            raise ConfigError("give either P_c_total or P_c_i, not both")
        if "P_c_i" in d:
            d["P_c_total"] = float(d.pop("P_c_i")) * M
        for key, scale in _FILE_SCALAR_UNITS.items():
            if key in d:
                kw[key] = float(d[key]) * scale
            elif key in ("P_c_total", "P_d_total", "P_cir"):
                raise ConfigError(f"missing required key {key!r}")
        ant = dict(d["antenna"])
        if ("g_side_db" in ant) == ("g_side_linear" in ant):
            raise ConfigError("antenna needs exactly one of g_side_db / g_side_linear")
        g_side = float(db_to_linear(ant["g_side_db"])) if "g_side_db" in ant else float(ant["g_side_linear"])
        kw["antenna"] = AntennaPattern(float(db_to_linear(ant["G_main_db"])), g_side, float(ant["theta_bw"]))
        if "nakagami_m" in d:
            m = d["nakagami_m"]
            if isinstance(m, float) and m.is_integer():
                m = int(m)
            kw["nakagami_m"] = m
        if "per_interferer_alpha" in d:
            kw["per_interferer_alpha"] = bool(d["per_interferer_alpha"])
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return ScenarioConfig(**kw)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Fully resolved scenario in linear SI units (JSON-serialisable)."""
    out: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, np.ndarray):
            value = [float(x) for x in value]
        elif isinstance(value, AntennaPattern):
            value = dataclasses.asdict(value)
        out[f.name] = value
    return out


def scenario_hash(cfg: ScenarioConfig) -> str:
    blob = json.dumps(scenario_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_scenario(path: str | Path, *, strict: bool = True) -> ScenarioConfig:
    """Read a JSON scenario file; raises :class:`ConfigError` if it is invalid."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    cfg = scenario_from_dict(raw)
    rep = validate_scenario(cfg)
    for w in rep.warnings:
        warnings.warn(w, stacklevel=2)
    if strict and not rep.ok:
        raise ConfigError("; ".join(rep.violations))
    return cfg


def table1_scenario(**overrides) -> ScenarioConfig:
    """
    Reference 5-band scenario: 20 MHz bands, lambda_d = 1e-4 and
    lambda_c = 1e-5 users/m^2, 325 mW per cellular user, 20 mW D2D ceiling,
    R_d = 10 m, R_c = 30 m, 0 dB thresholds, 0.95 QoS floors, G = 10 dB,
    g_s = 0.1 dB, theta = pi/10, beta = 0.45, no circuit power.

    The total D2D budget is not part of the reference table; it defaults to
    the sum of the per-band ceilings (100 mW) so that it is not binding.
    Keyword overrides may name any field, or the antenna fields
    ``G_main``, ``g_side`` and ``theta_bw``.
    """
    M = overrides.pop("num_bands", 5)
    ant = {k: overrides.pop(k) for k in ("G_main", "g_side", "theta_bw") if k in overrides}
    kw = dict(
        num_bands=M,
        bandwidth_per_band=20e6,
        lambda_d=1e-4,
        lambda_c=1e-5,
        P_c_total=0.325 * M,
        P_d_total=0.020 * M,
        P_d_max_i=0.020,
        P_cir=0.0,
        R_d=10.0,
        R_c=30.0,
        T_d=1.0,
        T_c=1.0,
        theta_d=0.95,
        theta_c=0.95,
        antenna=AntennaPattern.from_db(10.0, 0.1, math.pi / 10),
        N0=0.0,
        alpha_L=2.0,
        alpha_N=4.0,
        beta=0.45,
        nakagami_m=1,
    )
    kw.update(overrides)
    cfg = ScenarioConfig(**kw)
    return cfg.replace(**ant) if ant else cfg


def band_vector(cfg: ScenarioConfig, values: Sequence[float] | float) -> np.ndarray:
    if np.ndim(values) == 0:
        return np.full(cfg.num_bands, float(values))
    return np.asarray(values, dtype=float)
