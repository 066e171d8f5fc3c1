"""Rate lower bound, average sum rate (ASR) and energy efficiency (EE)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytic import stp
from .config import PowerVector, ScenarioConfig

__all__ = [
    "BandMetrics",
    "band_metrics",
    "energy_efficiency",
    "ee_from_stp",
    "golden_section_max",
    "rate_lower_bound",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BandMetrics:
    band: int
    stp_d: float
    stp_c: float
    rate_d: float  # bit/s
    asr_d: float  # bit/s/m^2


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-4):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > rtol * max(1.0, abs(a) + abs(b)) / 2:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def rate_lower_bound(W: float, T: float, stp_at: Callable[[float], float], mode: str = "fixed") -> float:
    """
    W * log2(1 + T) * P(SINR >= T) in bit/s.

    ``mode='sup'`` maximises over the threshold with a golden-section search
    on log10(T) in [-3, 3] instead of using the configured ``T``.
    """
    if W <= 0:
        raise ValueError("bandwidth must be > 0")
    if mode == "fixed":
        return W * math.log2(1.0 + T) * stp_at(T)
    if mode == "sup":
        g = lambda x: W * math.log2(1.0 + 10.0 ** x) * stp_at(10.0 ** x)
        _, best = golden_section_max(g, -3.0, 3.0, rtol=1e-5)
        return max(best, 0.0)
    raise ValueError(f"mode must be 'fixed' or 'sup', got {mode!r}")


def band_metrics(cfg: ScenarioConfig, p, method: str = "auto", rate_mode: str = "fixed") -> list[BandMetrics]:
    p = PowerVector(p) if not isinstance(p, PowerVector) else p
    out = []
    for i in range(cfg.num_bands):
        b = cfg.band(i)
        P = float(p[i])
        stp_d = stp(cfg, P, i, "d2d", method).value
        stp_c = stp(cfg, P, i, "bs", method).value
        if rate_mode == "fixed":
            rate = rate_lower_bound(b["bandwidth_per_band"], b["T_d"], lambda T: stp_d)
        else:
            cfg_T = lambda T: cfg.replace(T_d=np.where(np.arange(cfg.num_bands) == i, T, cfg.T_d))
            rate = rate_lower_bound(b["bandwidth_per_band"], b["T_d"],
                                    lambda T: stp(cfg_T(T), P, i, "d2d", method).value, "sup")
        out.append(BandMetrics(i, stp_d, stp_c, rate, b["lambda_d"] * rate))
    return out


def ee_from_stp(cfg: ScenarioConfig, p, stp_d) -> float:
    """EE for given per-band D2D STP values (bit/J)."""
    p = np.asarray(p, dtype=float)
    stp_d = np.asarray(stp_d, dtype=float)
    num = cfg.lambda_d * cfg.bandwidth_per_band * np.log2(1.0 + cfg.T_d) * stp_d
    den = cfg.lambda_d * (p + 2.0 * cfg.P_cir)
    den_total = math.fsum(den)
    if not den_total > 0:
        raise ZeroDivisionError("EE undefined: total D2D power consumption is zero")
    return math.fsum(num) / den_total


def energy_efficiency(cfg: ScenarioConfig, p, method: str = "auto", rate_mode: str = "fixed") -> float:
    """
    Sum over bands of lambda_d * rate, divided by the sum of
    lambda_d * (P_d + 2 P_cir). Returned in bit/J.
    """
    p = PowerVector(p) if not isinstance(p, PowerVector) else p
    den = math.fsum(cfg.lambda_d * (p.p + 2.0 * cfg.P_cir))
    if not den > 0:
        raise ZeroDivisionError("EE undefined: total D2D power consumption is zero")
    bm = band_metrics(cfg, p, method, rate_mode)
    return math.fsum(b.asr_d for b in bm) / den
