"""
Monte Carlo oracle for the STP and EE.

Each realization drops PPP interferers in a finite window around the
typical receiver, draws blockage, fading and antenna gain for every link
and records one SINR sample. Every realization owns a Philox stream keyed
by (seed, band, receiver type, realization index), so results do not
depend on how realizations are spread over threads.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import PowerVector, ScenarioConfig, effective_gain_pmf
from .propagation import sample_fading

__all__ = [
    "Estimate",
    "SimulationPlan",
    "estimate_ee",
    "estimate_stp",
    "realize_sinr",
    "realize_sinr_bs",
    "realize_sinr_d2d",
    "realization_rng",
    "simulate_sinr",
]

WHO_CODE = {"d2d": 0, "bs": 1}
Z95 = 1.959963984540054
CHUNK = 250


@dataclass(frozen=True)
class SimulationPlan:
    """
    area : m^2 of the sampling window centred on the typical receiver.
    window : 'disk' or 'square'.
    guard_radius : interferer distances are clamped to at least this (m).
    pathloss : 'physical' gives every interferer the exponent of its own
        LOS/NLOS state; 'desired' reuses the desired link's exponent, which
        is the assumption behind the analytic integrals.
    """

    area: float = 3e6
    realizations: int = 1000
    seed: int = 0
    guard_radius: float = 0.1
    window: str = "disk"
    pathloss: str = "physical"
    threads: int = 1

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError("area must be > 0")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.window not in ("disk", "square"):
            raise ValueError("window must be 'disk' or 'square'")
        if self.pathloss not in ("physical", "desired"):
            raise ValueError("pathloss must be 'physical' or 'desired'")

    @property
    def radius(self) -> float:
        return math.sqrt(self.area / math.pi)


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width_95: float
    n: int

    @property
    def interval(self):
        return self.mean - self.half_width_95, self.mean + self.half_width_95


def realization_rng(seed: int, band: int, who: str, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1), spawn_key=(int(band), WHO_CODE[who], int(index)))
    return np.random.Generator(np.random.Philox(ss))


def _distances(lam: float, plan: SimulationPlan, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(lam * plan.area)
    if plan.window == "disk":
        r = plan.radius * np.sqrt(rng.random(n))
    else:
        half = math.sqrt(plan.area) / 2
        xy = rng.uniform(-half, half, size=(n, 2))
        r = np.hypot(xy[:, 0], xy[:, 1])
    return np.maximum(r, plan.guard_radius)


def _aggregate(lam, power, cfg, plan, rng, gains, cum, desired_alpha):
    r = _distances(lam, plan, rng)
    n = r.size
    if n == 0 or power == 0.0:
        return 0.0
    los = rng.random(n) < np.exp(-cfg.beta * r)
    g = sample_fading(cfg.nakagami_m, rng, n)
    G_k = gains[np.searchsorted(cum, rng.random(n), side="right")]
    if plan.pathloss == "physical":
        alpha = np.where(los, cfg.alpha_L, cfg.alpha_N)
    else:
        alpha = desired_alpha
    return float(np.sum(power * G_k * g * r ** (-alpha)))


def realize_sinr(cfg: ScenarioConfig, p, band: int, who: str, rng: np.random.Generator,
                 plan: SimulationPlan = SimulationPlan()) -> float:
    """One SINR sample at the typical D2D receiver or base station of ``band``."""
    P_d = float(p[band]) if np.ndim(p) else float(p)
    P_c = cfg.P_c_i
    b = cfg.band(band)
    if who == "d2d":
        P_self, R = P_d, b["R_d"]
    elif who == "bs":
        P_self, R = P_c, b["R_c"]
    else:
        raise ValueError(f"who must be 'd2d' or 'bs', got {who!r}")
    pmf = effective_gain_pmf(cfg.antenna)
    gains = np.array([gk for gk, _ in pmf])
    cum = np.cumsum([pk for _, pk in pmf])[:-1]

    desired_los = rng.random() < math.exp(-cfg.beta * R)
    alpha = cfg.alpha_L if desired_los else cfg.alpha_N
    g0 = float(sample_fading(cfg.nakagami_m, rng))
    signal = P_self * cfg.G0 * g0 * R ** (-alpha)

    interference = _aggregate(b["lambda_c"], P_c, cfg, plan, rng, gains, cum, alpha)
    interference += _aggregate(b["lambda_d"], P_d, cfg, plan, rng, gains, cum, alpha)
    denom = interference + cfg.N0
    if denom == 0.0:
        return math.inf if signal > 0 else 0.0
    return signal / denom


def realize_sinr_d2d(cfg, p, band, rng, plan: SimulationPlan = SimulationPlan()) -> float:
    return realize_sinr(cfg, p, band, "d2d", rng, plan)


def realize_sinr_bs(cfg, p, band, rng, plan: SimulationPlan = SimulationPlan()) -> float:
    return realize_sinr(cfg, p, band, "bs", rng, plan)


def _chunk(cfg, p, band, who, plan, start, stop):
    return np.array([realize_sinr(cfg, p, band, who, realization_rng(plan.seed, band, who, k), plan)
                     for k in range(start, stop)])


def simulate_sinr(cfg: ScenarioConfig, p, band: int, who: str, plan: SimulationPlan) -> np.ndarray:
    """All SINR samples of ``plan``, in realization order."""
    bounds = [(s, min(s + CHUNK, plan.realizations)) for s in range(0, plan.realizations, CHUNK)]
    if plan.threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(plan.threads) as ex:
            parts = list(ex.map(lambda b: _chunk(cfg, p, band, who, plan, *b), bounds))
    else:
        parts = [_chunk(cfg, p, band, who, plan, *b) for b in bounds]
    return np.concatenate(parts)


def _proportion(successes: int, n: int) -> Estimate:
    mean = successes / n
    return Estimate(mean, Z95 * math.sqrt(mean * (1.0 - mean) / n), n)


def estimate_stp(cfg: ScenarioConfig, p, band: int, who: str, plan: SimulationPlan,
                 dump_csv: str | None = None) -> Estimate:
    """Empirical P(SINR >= T) with a normal-approximation 95% interval."""
    sinr = simulate_sinr(cfg, p, band, who, plan)
    T = cfg.T_d[band] if who == "d2d" else cfg.T_c[band]
    if dump_csv is not None:
        with open(dump_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["realization", "sinr"])
            w.writerows((k, repr(float(s))) for k, s in enumerate(sinr))
    # integer count: exact and order independent
    return _proportion(int(np.count_nonzero(sinr >= T)), sinr.size)


def estimate_ee(cfg: ScenarioConfig, p, plan: SimulationPlan) -> Estimate:
    """
    EE assembled from per-band empirical D2D STP. The interval comes from
    the delta method on the numerator (bands are simulated independently).
    """
    p = PowerVector(p) if not isinstance(p, PowerVector) else p
    den = math.fsum(cfg.lambda_d * (p.p + 2.0 * cfg.P_cir))
    if not den > 0:
        raise ZeroDivisionError("EE undefined: total D2D power consumption is zero")
    coef = cfg.lambda_d * cfg.bandwidth_per_band * np.log2(1.0 + cfg.T_d) / den
    num, var = [], []
    for i in range(cfg.num_bands):
        est = estimate_stp(cfg, p, i, "d2d", plan)
        num.append(coef[i] * est.mean)
        var.append(coef[i] ** 2 * est.mean * (1.0 - est.mean) / est.n)
    return Estimate(math.fsum(num), Z95 * math.sqrt(math.fsum(var)), plan.realizations)


def with_threads(plan: SimulationPlan, threads: int) -> SimulationPlan:
    return replace(plan, threads=threads)
