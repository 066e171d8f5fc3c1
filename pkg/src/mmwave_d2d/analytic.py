"""
Successful transmission probability (STP) of the typical D2D receiver and
the typical base station.

The general route sums, over the binomial expansion index ``n`` and the
LOS/NLOS state of the desired link, products of PPP Laplace factors
``exp(-2*pi*lambda * sum_k p_k * I(c_k))`` where ``I`` is the interference
integral computed by :func:`interference_integral`. The m=1 and m=2
closed forms are separate evaluators that are checked against it.
"""
from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate, special

from .config import ScenarioConfig, effective_gain_pmf
from .propagation import los_probability

__all__ = [
    "BandStpModel",
    "IntegralTerms",
    "QuadratureError",
    "StpResult",
    "StpCurve",
    "UnsupportedModelError",
    "closed_form_stp_m1",
    "closed_form_stp_m2",
    "integral_terms",
    "interference_integral",
    "kernel_constant",
    "lemma1_constant",
    "stp",
    "stp_cellular",
    "stp_d2d",
    "stp_vector",
]

LOS, NLOS = "LOS", "NLOS"
LINK_TYPES = (LOS, NLOS)
Who = Literal["d2d", "bs"]
METHODS = ("quadrature", "closed_form_m1", "closed_form_m2", "monte_carlo")


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, msg, partial=float("nan"), abserr=float("nan")):
        super().__init__(f"{msg} (partial estimate {partial:.6g} +/- {abserr:.2g})")
        self.partial = partial
        self.abserr = abserr


class UnsupportedModelError(ValueError):
    """A closed form was requested outside the parameters it was derived for."""


@dataclass(frozen=True)
class StpResult:
    value: float
    method: str
    abs_err_est: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", min(1.0, max(0.0, float(self.value))))

    def __float__(self):
        return self.value


def lemma1_constant(m: int) -> float:
    """a = m * (m!)**(-1/m), the exponent scale of the gamma-CDF bound."""
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    return m * math.exp(-math.lgamma(m + 1) / m)


def _kernel(u, alpha, m):
    # 1 - (1 + u**-alpha)**-m without cancellation for large u
    return -math.expm1(-m * math.log1p(u ** (-alpha)))


def _weight(j, beta):
    if j == LOS:
        return lambda r: math.exp(-beta * r)
    if j == NLOS:
        return lambda r: -math.expm1(-beta * r)
    raise ValueError(f"link type must be LOS or NLOS, got {j!r}")


def _diverges(alpha, beta, j):
    # integrand tail ~ m*x*r**(1-alpha)*w(r); at alpha == 2 only exp damping saves it
    if alpha > 2:
        return False
    return not (j == LOS and beta > 0)


def _quad_panels(f, edges, rtol):
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e, info = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol, limit=200, full_output=1)[:3]
        total += val
        err += e
        if e > max(10 * rtol * abs(val), 1e-300) and e > 1e-14 * abs(total):
            raise QuadratureError(f"no convergence on [{lo:g}, {hi:g}]", total, err)
    return total, err


U_MAX = 1e6


def expint_real(p: float, x: float) -> float:
    """
    Generalised exponential integral E_p(x) = int_1^inf exp(-x t) t**-p dt
    for real p >= 1 and x >= 0.
    """
    if x == 0.0:
        if p <= 1.0:
            return math.inf
        return 1.0 / (p - 1.0)
    n = math.floor(p)
    q = p - n
    if q == 0.0:
        return float(special.expn(int(n), x))
    # E_q for 0 < q < 1 from the upper incomplete gamma, then recur upwards
    e = x ** (q - 1.0) * special.gamma(1.0 - q) * special.gammaincc(1.0 - q, x)
    ex = math.exp(-x)
    for k in range(n):
        e = (ex - x * e) / (q + k)
    return float(e)


def _weighted_tail(U, alpha, m, b, j):
    """
    int_U^inf (m u**-a - m(m+1)/2 u**-2a) w(u) u du with w = exp(-b u)
    (LOS) or 1 - exp(-b u) (NLOS); the kernel expansion to second order.
    """
    out = 0.0
    for coef, a in ((m, alpha), (-m * (m + 1) / 2.0, 2.0 * alpha)):
        damped = U ** (2.0 - a) * expint_real(a - 1.0, b * U)
        if j == LOS:
            out += coef * damped
        else:
            out += coef * (U ** (2.0 - a) / (a - 2.0) - damped)
    return out


def _underflow_los_alpha2(s, m, beta, U=1e3):
    """
    LOS integral at alpha = 2 when beta*s is below the smallest double.
    The weight is 1 on [0, U]; beyond U the damped tail
    m E_1(b U) - m(m+1)/2 U**-2 E_3(b U) is taken at small argument, with
    log(b U) formed in log space.
    """
    f = lambda u: _kernel(u, 2.0, m) * u
    val, err = _quad_panels(f, [0.0, 1.0, 10.0, 100.0, U], 1e-9)
    log_bU = math.log(beta) + math.log(s) + math.log(U)
    val += m * (-np.euler_gamma - log_bU) - m * (m + 1) / 2 * U ** -2 / 2.0
    err += m * (m + 1) * (m + 2) / 6 * U ** -4 / 4.0
    return s * s * val, s * s * err


def _integral_with_error(c_scale, alpha, m, beta, j, rtol=1e-8):
    if c_scale < 0 or alpha < 2:
        raise ValueError("need c_scale >= 0 and alpha >= 2")
    if c_scale == 0.0 or (j == NLOS and beta == 0.0):
        return 0.0, 0.0
    if _diverges(alpha, beta, j):
        return math.inf, 0.0
    # r = s*u puts the kernel knee at u = 1
    s = (c_scale / m) ** (1.0 / alpha)
    w = _weight(j, beta)
    f = lambda u: _kernel(u, alpha, m) * w(s * u) * u
    bs = beta * s
    if bs == 0.0 and beta > 0.0:
        # beta*s underflows: the NLOS weight is 0 to double precision
        if j == NLOS:
            return 0.0, 0.0
        if alpha <= 2.0:
            return _underflow_los_alpha2(s, m, beta)
    if j == LOS and bs > 0:
        u_cut = 60.0 / bs  # exp(-60) weight: tail is below double precision
    else:
        u_cut = max(1e3, 60.0 / bs) if bs > 0 else 1e3
    # very weak blockage pushes the damping scale out of reach of panels;
    # stop at U_MAX and integrate the weighted power-law tail analytically
    weighted_tail = bs > 0 and u_cut > U_MAX
    if weighted_tail:
        u_cut = U_MAX
    edges = [0.0]
    d = 1.0
    while d < u_cut:
        edges.append(d)
        d *= 10.0
    edges.append(u_cut)
    if bs > 0 and 1.0 / bs < u_cut:
        edges = sorted(set(edges) | {1.0 / bs})
    val, err = _quad_panels(f, edges, rtol / 10)
    if weighted_tail:
        val += _weighted_tail(u_cut, alpha, m, bs, j)
        err += m * (m + 1) * (m + 2) / 6 * u_cut ** (2.0 - 3 * alpha) / (3 * alpha - 2.0)
    elif not (j == LOS and bs > 0):
        # power-law tail with weight ~ 1: kernel = m*u**-alpha - O(u**-2alpha)
        tail = m * u_cut ** (2.0 - alpha) / (alpha - 2.0)
        val += tail
        err += m * (m + 1) / 2 * u_cut ** (2.0 - 2 * alpha) / (2 * alpha - 2.0)
    return s * s * val, s * s * err


def interference_integral(c_scale: float, alpha_int: float, m: int, beta: float, j: str,
                          rtol: float = 1e-8) -> float:
    """
    int_0^inf (1 - (1 + c_scale / (r**alpha_int * m))**-m) f_j(r) r dr

    with f_LOS(r) = exp(-beta r) and f_NLOS = 1 - f_LOS. Returns ``inf`` when
    the integral diverges (alpha_int = 2 without exponential damping).
    """
    return _integral_with_error(float(c_scale), float(alpha_int), int(m), float(beta), j, rtol)[0]


@functools.lru_cache(maxsize=None)
def kernel_constant(alpha: float, m: int) -> tuple[float, float]:
    """
    int_0^inf (1 - (1 + u**-alpha)**-m) u du and its error estimate.

    Summed over LOS and NLOS the weights add to one, so with a common
    exponent  I_LOS(c) + I_NLOS(c) = (c/m)**(2/alpha) * kernel_constant.
    """
    if alpha <= 2:
        return math.inf, 0.0
    return _integral_with_error(float(m), alpha, m, 0.0, LOS, rtol=1e-12)


@dataclass(frozen=True)
class IntegralTerms:
    """
    Interference integrals for one expansion index ``n``, each a
    ``{LOS: ..., NLOS: ...}`` mapping over the interferer link type.

    ``los_*`` belong to the branch where the desired link is LOS, ``nlos_*``
    to the NLOS branch; ``*_d`` are D2D interferers and ``*_c`` cellular.
    """

    who: str
    n: int
    los_d: dict
    los_c: dict
    nlos_d: dict
    nlos_c: dict

    # names used for the D2D receiver ...
    A_D = property(lambda s: s.los_d)
    A_C = property(lambda s: s.los_c)
    B_D = property(lambda s: s.nlos_d)
    B_C = property(lambda s: s.nlos_c)
    # ... and for the base station
    E_D = property(lambda s: s.los_d)
    E_C = property(lambda s: s.los_c)
    F_D = property(lambda s: s.nlos_d)
    F_C = property(lambda s: s.nlos_c)


def _link_params(cfg: ScenarioConfig, P_d: float, band: int, who: str):
    """(P_self, T, R, [(class, lambda, power ratio to P_self)])."""
    b = cfg.band(band)
    P_c = cfg.P_c_i
    if who == "d2d":
        ratio_c = math.inf if P_d == 0 else P_c / P_d
        return P_d, b["T_d"], b["R_d"], [("d", b["lambda_d"], 1.0), ("c", b["lambda_c"], ratio_c)]
    if who == "bs":
        ratio_d = math.inf if P_c == 0 else P_d / P_c
        return P_c, b["T_c"], b["R_c"], [("d", b["lambda_d"], ratio_d), ("c", b["lambda_c"], 1.0)]
    raise ValueError(f"who must be 'd2d' or 'bs', got {who!r}")


def _branch_alphas(cfg):
    return ((LOS, cfg.alpha_L, lambda R: los_probability(R, cfg.beta)),
            (NLOS, cfg.alpha_N, lambda R: 1.0 - los_probability(R, cfg.beta)))


def _interferer_alpha(cfg, branch_alpha, j):
    if not cfg.per_interferer_alpha:
        return branch_alpha
    return cfg.alpha_L if j == LOS else cfg.alpha_N


def integral_terms(cfg: ScenarioConfig, P_d: float, band: int, who: Who = "d2d", n: int = 1) -> IntegralTerms:
    """Per-link-type interference integrals (weighted by p_k, summed over k)."""
    m = cfg.nakagami_m
    a = lemma1_constant(m)
    _, T, R, classes = _link_params(cfg, P_d, band, who)
    pmf = effective_gain_pmf(cfg.antenna)
    out = {}
    for branch, alpha_b, _ in _branch_alphas(cfg):
        for cls, _lam, ratio in classes:
            d = {}
            for j in LINK_TYPES:
                alpha_j = _interferer_alpha(cfg, alpha_b, j)
                tot = 0.0
                for G_k, p_k in pmf:
                    c = a * n * T * R ** alpha_b * ratio * G_k / cfg.G0
                    tot += p_k * (math.inf if math.isinf(c) else
                                  interference_integral(c, alpha_j, m, cfg.beta, j))
                d[j] = tot
            out[f"{branch.lower()}_{cls}"] = d
    return IntegralTerms(who=who, n=n, **out)


def _class_exponent(cfg, a, n, T, R, alpha_b, lam, ratio, pmf, split):
    """2*pi*lambda * sum_k p_k * sum_j I_j, with its error estimate."""
    m = cfg.nakagami_m
    if lam == 0.0:
        return 0.0, 0.0
    if math.isinf(ratio):
        return math.inf, 0.0
    expo, err = 0.0, 0.0
    for G_k, p_k in pmf:
        c = a * n * T * R ** alpha_b * ratio * G_k / cfg.G0
        if c == 0.0:
            continue
        if split or cfg.per_interferer_alpha:
            for j in LINK_TYPES:
                v, e = _integral_with_error(c, _interferer_alpha(cfg, alpha_b, j), m, cfg.beta, j)
                expo += p_k * v
                err += p_k * e
        else:
            K, eK = kernel_constant(float(alpha_b), m)
            scale = (c / m) ** (2.0 / alpha_b) if not math.isinf(K) else 1.0
            expo += p_k * K * scale
            err += p_k * eK * scale
    return 2 * math.pi * lam * expo, 2 * math.pi * lam * err


def _stp_quadrature(cfg: ScenarioConfig, P_d: float, band: int, who: str, split: bool) -> StpResult:
    m = cfg.nakagami_m
    a = lemma1_constant(m)
    P_self, T, R, classes = _link_params(cfg, P_d, band, who)
    if P_self <= 0.0:
        return StpResult(0.0, "quadrature", 0.0)
    pmf = effective_gain_pmf(cfg.antenna)
    total, err = 0.0, 0.0
    for _branch, alpha_b, f_branch in _branch_alphas(cfg):
        weight = f_branch(R)
        if weight == 0.0:
            continue
        for n in range(1, m + 1):
            coef = math.comb(m, n) * (-1) ** (n + 1)
            noise = a * n * T * R ** alpha_b * cfg.N0 / (P_self * cfg.G0)
            expo, e_expo = noise, 0.0
            for _cls, lam, ratio in classes:
                x, e = _class_exponent(cfg, a, n, T, R, alpha_b, lam, ratio, pmf, split)
                expo += x
                e_expo += e
            term = coef * math.exp(-expo) if not math.isinf(expo) else 0.0
            total += weight * term
            err += weight * abs(term) * e_expo
    return StpResult(total, "quadrature", err)


def _t_factor(cfg, T, power):
    """sum_k p_k (T G_k / G0)**power."""
    return sum(p_k * (T * G_k / cfg.G0) ** power for G_k, p_k in effective_gain_pmf(cfg.antenna))


def _check_closed_form(cfg, m):
    ok = (cfg.nakagami_m == m and cfg.alpha_L == 2.0 and cfg.alpha_N == 4.0
          and cfg.N0 == 0.0 and not cfg.per_interferer_alpha)
    if not ok:
        raise UnsupportedModelError(
            f"closed form needs m={m}, alpha_L=2, alpha_N=4, N0=0 and the common-exponent model")


def _closed_form_densities(cfg, P_d, band, who, power):
    """(R, effective interferer density) with the power ratio raised to ``power``."""
    b = cfg.band(band)
    P_c = cfg.P_c_i
    if who == "d2d":
        return b["R_d"], b["T_d"], b["lambda_d"] + b["lambda_c"] * (P_c / P_d) ** power
    if who == "bs":
        return b["R_c"], b["T_c"], b["lambda_c"] + b["lambda_d"] * (P_d / P_c) ** power
    raise ValueError(f"who must be 'd2d' or 'bs', got {who!r}")


def closed_form_stp_m1(cfg: ScenarioConfig, P_d: float, band: int, who: Who = "d2d") -> StpResult:
    """
    Rayleigh fading, alpha_L = 2, alpha_N = 4, no noise: the LOS branch
    vanishes and the NLOS branch is exp(-pi^2/2 R^2 t Lambda) f_N(R).
    """
    _check_closed_form(cfg, 1)
    if (who == "d2d" and P_d <= 0) or (who == "bs" and cfg.P_c_i <= 0):
        return StpResult(0.0, "closed_form_m1", 0.0)
    R, T, lam = _closed_form_densities(cfg, P_d, band, who, 0.5)
    t = _t_factor(cfg, T, 0.5)
    val = math.exp(-0.5 * math.pi ** 2 * R * R * t * lam) * (1.0 - los_probability(R, cfg.beta))
    return StpResult(val, "closed_form_m1", 0.0)


# exponent constants of the printed m=2 expression
M2_NLOS = (0.2102, 0.2974)
M2_LOS = (0.707, 1.4142)

_m2_deviation: dict = {}
_m2_lock = threading.Lock()


def _closed_form_m2_value(cfg, P_d, band, who):
    R, T, lam_sqrt = _closed_form_densities(cfg, P_d, band, who, 0.5)
    _, _, lam_lin = _closed_form_densities(cfg, P_d, band, who, 1.0)
    t = _t_factor(cfg, T, 0.5)
    t1 = _t_factor(cfg, T, 1.0)
    pi2 = math.pi ** 2
    e1, e2 = (k * pi2 * R ** 2 * t * lam_sqrt for k in M2_NLOS)
    l1, l2 = (k * math.pi * R ** 4 * t1 * lam_lin for k in M2_LOS)
    f_L = los_probability(R, cfg.beta)
    # alternating binomial sum 2 e^{-x1} - e^{-x2} (n = 1, 2)
    return (2 * math.exp(-e1) - math.exp(-e2)) * (1 - f_L) + (2 * math.exp(-l1) - math.exp(-l2)) * f_L


def closed_form_stp_m2(cfg: ScenarioConfig, P_d: float, band: int, who: Who = "d2d") -> StpResult:
    """
    Reported m=2 expression with fixed exponent constants. Its error
    estimate is the deviation from the quadrature value, measured once per
    (scenario, band, who, power) and memoised.
    """
    _check_closed_form(cfg, 2)
    if (who == "d2d" and P_d <= 0) or (who == "bs" and cfg.P_c_i <= 0):
        return StpResult(0.0, "closed_form_m2", 0.0)
    val = _closed_form_m2_value(cfg, P_d, band, who)
    key = (cfg.antenna, cfg.beta, cfg.P_c_i, tuple(cfg.band(band).items()), who, float(P_d))
    dev = _m2_deviation.get(key)
    if dev is None:
        ref = _stp_quadrature(cfg, P_d, band, who, split=False).value
        with _m2_lock:
            dev = _m2_deviation.setdefault(key, abs(min(1.0, max(0.0, val)) - ref))
    return StpResult(val, "closed_form_m2", dev)


def closed_form_applicable(cfg: ScenarioConfig) -> bool:
    try:
        _check_closed_form(cfg, 1)
    except UnsupportedModelError:
        return False
    return True


def stp(cfg: ScenarioConfig, P_d: float, band: int, who: Who = "d2d", method: str = "auto",
        split_by_link_type: bool = False) -> StpResult:
    """
    STP of the typical D2D receiver (``who='d2d'``) or base station
    (``who='bs'``) in ``band`` (0-based) when D2D transmitters use ``P_d``.

    ``method='auto'`` takes the m=1 closed form when it applies and
    quadrature otherwise; the m=2 closed form is only used on request.
    """
    if P_d < 0:
        raise ValueError("P_d must be nonnegative")
    if method == "auto":
        method = "closed_form_m1" if closed_form_applicable(cfg) else "quadrature"
    if method == "quadrature":
        return _stp_quadrature(cfg, float(P_d), band, who, split_by_link_type)
    if method == "closed_form_m1":
        return closed_form_stp_m1(cfg, float(P_d), band, who)
    if method == "closed_form_m2":
        return closed_form_stp_m2(cfg, float(P_d), band, who)
    raise ValueError(f"unknown analytic method {method!r}")


def stp_d2d(cfg: ScenarioConfig, P_d_i: float, band: int, method: str = "quadrature", **kw) -> StpResult:
    return stp(cfg, P_d_i, band, "d2d", method, **kw)


def stp_cellular(cfg: ScenarioConfig, P_d_i: float, band: int, method: str = "quadrature", **kw) -> StpResult:
    return stp(cfg, P_d_i, band, "bs", method, **kw)


def binomial_alternating_sum(m: int) -> float:
    """sum_{n=1}^m C(m,n) (-1)^(n+1); equals 1 for every m >= 1."""
    return float(sum(math.comb(m, n) * (-1) ** (n + 1) for n in range(1, m + 1)))


class StpCurve:
    """
    STP of one band and receiver type as a vectorised function of the D2D
    power. Interference integrals are evaluated once at unit power ratio and
    rescaled by ratio**(2/alpha); this is exact whenever interferers share
    the desired link's exponent. Otherwise every call falls back to
    :func:`stp`.
    """

    def __init__(self, cfg: ScenarioConfig, band: int, who: Who = "d2d", method: str = "auto"):
        if method == "auto":
            method = "closed_form_m1" if closed_form_applicable(cfg) else "quadrature"
        self.cfg, self.band, self.who, self.method = cfg, band, who, method
        self._terms = None
        if method == "quadrature" and not cfg.per_interferer_alpha:
            self._terms = self._factorise()
        elif method == "closed_form_m1":
            _check_closed_form(cfg, 1)
            b = cfg.band(band)
            R, T = (b["R_d"], b["T_d"]) if who == "d2d" else (b["R_c"], b["T_c"])
            k = 0.5 * math.pi ** 2 * R * R * _t_factor(cfg, T, 0.5)
            f_N = 1.0 - los_probability(R, cfg.beta)
            self._terms = [(f_N, 0.0, k * b["lambda_d"], k * b["lambda_c"], 0.5)]

    def _factorise(self):
        cfg = self.cfg
        m = cfg.nakagami_m
        a = lemma1_constant(m)
        P_self, T, R, classes = _link_params(cfg, 1.0, self.band, self.who)
        pmf = effective_gain_pmf(cfg.antenna)
        terms = []
        for _branch, alpha_b, f_branch in _branch_alphas(cfg):
            weight = f_branch(R)
            if weight == 0.0:
                continue
            for n in range(1, m + 1):
                coef = weight * math.comb(m, n) * (-1) ** (n + 1)
                noise = a * n * T * R ** alpha_b * cfg.N0 / cfg.G0
                cls = {c: _class_exponent(cfg, a, n, T, R, alpha_b, lam, 1.0, pmf, False)[0]
                       for c, lam, _ in classes}
                terms.append((coef, noise, cls["d"], cls["c"], 2.0 / alpha_b))
        return terms

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        if self._terms is None:
            out = np.vectorize(lambda x: stp(self.cfg, float(x), self.band, self.who, self.method).value)(P)
            return float(out) if out.ndim == 0 else out
        P_c = self.cfg.P_c_i
        if self.who == "bs" and P_c <= 0:
            out = np.zeros_like(P)
            return float(out) if out.ndim == 0 else out
        total = np.zeros_like(P)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for coef, noise, Xd, Xc, q in self._terms:
                if self.who == "d2d":
                    expo = noise / P + Xd + _scaled(Xc, P_c / P, q)
                else:
                    expo = noise / P_c + Xc + _scaled(Xd, P / P_c, q)
                total = total + coef * np.exp(-expo)
        if self.who == "d2d":
            total = np.where(P > 0, total, 0.0)
        out = np.clip(total, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


def _scaled(X, ratio, q):
    # X * ratio**q with 0 * inf -> 0 (no interferers or zero interferer power)
    if X == 0.0:
        return np.zeros_like(ratio)
    return np.where(ratio == 0, 0.0, X * ratio ** q)


class BandStpModel:
    """
    STP of every band at once: ``model(p)`` maps powers of shape (..., M)
    to STP values of the same shape. Built from one :class:`StpCurve` per
    band.
    """

    def __init__(self, cfg: ScenarioConfig, who: Who = "d2d", method: str = "auto"):
        self.cfg, self.who = cfg, who
        self.curves = [StpCurve(cfg, i, who, method) for i in range(cfg.num_bands)]
        self.factorised = all(c._terms is not None for c in self.curves)
        if self.factorised:
            width = max(len(c._terms) for c in self.curves)
            arr = np.zeros((5, cfg.num_bands, width))
            arr[4] = 1.0
            for i, c in enumerate(self.curves):
                for t, term in enumerate(c._terms):
                    arr[:, i, t] = term
            self._coef, self._noise, self._Xd, self._Xc, self._q = arr
            # with a live cellular link and every P_d > 0, terms with a
            # divergent integral are exactly 0 and the rest has no 0*inf
            self._fast = bool(cfg.P_c_i > 0 and np.all(np.isfinite(arr[[0, 1, 4]])))
            dead = ~(np.isfinite(self._Xd) & np.isfinite(self._Xc))
            self._fcoef = np.where(dead, 0.0, self._coef)
            Xd = np.where(dead, 0.0, self._Xd)
            Xc = np.where(dead, 0.0, self._Xc)
            if self._fast and self.who == "bs":
                self._fixed = self._noise / cfg.P_c_i + Xc
                self._Xd_c = Xd * cfg.P_c_i ** (-self._q)
            elif self._fast:
                self._Xd_f = Xd
                self._Xc_c = Xc * cfg.P_c_i ** self._q

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if not self.factorised:
            return np.stack([c(p[..., i]) for i, c in enumerate(self.curves)], axis=-1)
        if self._fast and p.min() > 0:
            P = p[..., None]
            if self.who == "d2d":
                expo = self._noise / P + self._Xd_f + self._Xc_c * P ** (-self._q)
            else:
                expo = self._fixed + self._Xd_c * P ** self._q
            total = (self._fcoef * np.exp(-expo)).sum(axis=-1)
            return np.minimum(np.maximum(total, 0.0), 1.0)
        P = p[..., None]
        P_c = self.cfg.P_c_i
        if self.who == "bs" and P_c <= 0:
            return np.zeros_like(p)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.who == "d2d":
                ratio = P_c / P
                other = np.where((self._Xc == 0) | (ratio == 0), 0.0, self._Xc * ratio ** self._q)
                expo = self._noise / P + self._Xd + other
            else:
                ratio = P / P_c
                other = np.where((self._Xd == 0) | (ratio == 0), 0.0, self._Xd * ratio ** self._q)
                expo = self._noise / P_c + self._Xc + other
            terms = np.where(self._coef == 0, 0.0, self._coef * np.exp(-expo))
        total = terms.sum(axis=-1)
        if self.who == "d2d":
            total = np.where(p > 0, total, 0.0)
        return np.clip(total, 0.0, 1.0)


def stp_vector(cfg: ScenarioConfig, p, who: Who = "d2d", method: str = "auto") -> np.ndarray:
    return np.array([stp(cfg, float(p[i]), i, who, method).value for i in range(cfg.num_bands)])
