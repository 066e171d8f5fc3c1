"""Blockage, path loss, fading and interferer-gain sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import AntennaPattern, effective_gain_pmf

__all__ = [
    "LinkSample",
    "los_probability",
    "nlos_probability",
    "received_power",
    "sample_fading",
    "sample_interferer_gain",
    "sample_link",
    "sample_ppp_disk",
]


@dataclass(frozen=True)
class LinkSample:
    r: float
    is_los: bool
    g: float
    G_k: float


def los_probability(r, beta):
    """Probability that a link of length ``r`` (m) is unblocked, exp(-beta*r)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or beta < 0:
        raise ValueError("distance and blockage density must be nonnegative")
    out = np.exp(-beta * r)
    return float(out) if out.ndim == 0 else out


def nlos_probability(r, beta):
    return 1.0 - los_probability(r, beta)


def sample_fading(m: int, rng: np.random.Generator, size=None):
    """
    Nakagami-m power gain, Gamma(shape=m, scale=1/m): mean 1, variance 1/m.
    """
    if m < 1:
        raise ValueError(f"Nakagami parameter must be >= 1, got {m}")
    return rng.gamma(m, 1.0 / m, size=size)


def sample_interferer_gain(antenna: AntennaPattern, rng: np.random.Generator, size=None):
    """Draw combined antenna gains of randomly oriented interferers."""
    pmf = effective_gain_pmf(antenna)
    gains = np.array([g for g, _ in pmf])
    probs = np.array([p for _, p in pmf])
    # inverse-CDF on a single uniform keeps the stream usage fixed per draw
    u = rng.random(size)
    idx = np.searchsorted(np.cumsum(probs)[:-1], u, side="right")
    out = gains[idx]
    return float(out) if np.ndim(out) == 0 else out


def received_power(P_t, G_combined, g, r, alpha):
    """P_t * G * g * r**(-alpha)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("link distance must be > 0")
    out = P_t * G_combined * g * r ** (-np.asarray(alpha, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def sample_link(r: float, beta: float, m: int, antenna: AntennaPattern,
                rng: np.random.Generator, aligned: bool = False) -> LinkSample:
    is_los = bool(rng.random() < los_probability(r, beta))
    g = float(sample_fading(m, rng))
    G_k = antenna.G0 if aligned else sample_interferer_gain(antenna, rng)
    return LinkSample(r, is_los, g, G_k)


def sample_ppp_disk(intensity: float, radius: float, rng: np.random.Generator):
    """
    Homogeneous PPP on a disk centred at the origin.

    Returns the distances of the points to the origin; the angles are not
    needed by anything downstream.
    """
    n = rng.poisson(intensity * math.pi * radius * radius)
    return radius * np.sqrt(rng.random(n))
