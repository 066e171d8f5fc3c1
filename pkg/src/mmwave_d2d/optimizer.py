"""
Per-band D2D power allocation maximising EE under the power budget,
the per-band ceilings and the D2D / cellular STP floors.

Solver: quadratic exterior penalty on the two STP constraint families,
Euclidean projection onto the budget/box polytope, Nelder-Mead inner
solves and deterministic Sobol multi-starts. Because the D2D STP rises
and the cellular STP falls with P_d,i, every band has a feasible power
interval that is bracketed by bisection and used to repair the final
point.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .analytic import BandStpModel, StpCurve, stp
from .config import PowerVector, ScenarioConfig
from .metrics import ee_from_stp, energy_efficiency

__all__ = [
    "FeasibilityReport",
    "OptimizationError",
    "OptimizationOutcome",
    "OptimizerOptions",
    "SWEEP_AXES",
    "SweepRow",
    "apply_axis",
    "check_feasibility",
    "feasible_interval",
    "optimize_ee",
    "project_polytope",
    "sweep_ee",
]

log = logging.getLogger(__name__)

BOX_TOL = 1e-9
STP_TOL = 1e-6


class OptimizationError(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or {}


@dataclass(frozen=True)
class OptimizerOptions:
    starts: int = 16
    outer_iterations: int = 6
    penalty0: float = 1e2
    penalty_growth: float = 10.0
    simplex_tol: float = 1e-9  # W
    fatol: float = 1e-12  # on EE normalised by the best start
    max_inner_evals: int = 3000
    seed: int = 0
    threads: int = 1
    method: str = "auto"
    symmetrize: bool = True


@dataclass(frozen=True)
class FeasibilityReport:
    """Constraint slacks; a negative entry is a violation (outage)."""

    budget: float
    box_lower: np.ndarray
    box_upper: np.ndarray
    stp_d: np.ndarray
    stp_c: np.ndarray

    def feasible(self, box_tol: float = BOX_TOL, stp_tol: float = STP_TOL) -> bool:
        return (self.budget >= -box_tol and bool(np.all(self.box_lower >= -box_tol))
                and bool(np.all(self.box_upper >= -box_tol))
                and bool(np.all(self.stp_d >= -stp_tol)) and bool(np.all(self.stp_c >= -stp_tol)))

    @property
    def min_slack(self) -> float:
        return float(min(self.budget, self.box_lower.min(), self.box_upper.min(),
                         self.stp_d.min(), self.stp_c.min()))

    def violation(self) -> float:
        parts = [min(self.budget, 0.0)] + [np.minimum(a, 0.0) for a in
                                           (self.box_lower, self.box_upper, self.stp_d, self.stp_c)]
        return float(sum(np.sum(np.square(x)) for x in parts))

    def as_dict(self) -> dict:
        return {
            "budget": self.budget,
            "box_lower": self.box_lower.tolist(),
            "box_upper": self.box_upper.tolist(),
            "stp_d": self.stp_d.tolist(),
            "stp_c": self.stp_c.tolist(),
        }


@dataclass(frozen=True)
class OptimizationOutcome:
    p_opt: PowerVector
    ee_opt: float
    constraint_slacks: FeasibilityReport
    feasible: bool
    solver_trace: dict = field(default_factory=dict)


def _stps(cfg, p, method):
    sd = np.array([stp(cfg, float(p[i]), i, "d2d", method).value for i in range(cfg.num_bands)])
    sc = np.array([stp(cfg, float(p[i]), i, "bs", method).value for i in range(cfg.num_bands)])
    return sd, sc


def check_feasibility(cfg: ScenarioConfig, p, method: str = "auto") -> FeasibilityReport:
    p = np.asarray(PowerVector(p).p if not isinstance(p, PowerVector) else p.p)
    sd, sc = _stps(cfg, p, method)
    return FeasibilityReport(
        budget=cfg.P_d_total - math.fsum(p),
        box_lower=p.copy(),
        box_upper=cfg.P_d_max_i - p,
        stp_d=sd - cfg.theta_d,
        stp_c=sc - cfg.theta_c,
    )


def project_polytope(p, lower, upper, budget: float) -> np.ndarray:
    """
    Euclidean projection onto {lower <= x <= upper, sum(x) <= budget}.
    Requires sum(lower) <= budget.
    """
    p = np.asarray(p, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), p.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), p.shape)
    x = np.clip(p, lower, upper)
    if math.fsum(x) <= budget:
        return x
    if math.fsum(lower) > budget:
        raise ValueError("polytope is empty: lower bounds exceed the budget")
    # sum(clip(p - tau)) is nonincreasing in tau; bisect for the budget
    lo, hi = 0.0, float(np.max(p - lower))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.fsum(np.clip(p - mid, lower, upper)) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return np.clip(p - hi, lower, upper)


def _bisect(pred, lo, hi, iters=200):
    """pred(lo) False, pred(hi) True -> smallest-ish x with pred(x) True."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def feasible_interval(cfg: ScenarioConfig, band: int, method: str = "auto", curves=None):
    """
    [lo, hi] of powers satisfying both STP floors in ``band`` (within the
    per-band ceiling), or None if no power does.
    """
    pmax = float(cfg.P_d_max_i[band])
    th_d = float(cfg.theta_d[band])
    th_c = float(cfg.theta_c[band])
    cd, cc = curves or (StpCurve(cfg, band, "d2d", method), StpCurve(cfg, band, "bs", method))
    sd = lambda P: cd(P) >= th_d
    sc = lambda P: cc(P) >= th_c
    if not sd(pmax) or not sc(0.0):
        return None
    lo = 0.0 if sd(0.0) else _bisect(sd, 0.0, pmax)[1]
    hi = pmax if sc(pmax) else _bisect(lambda P: not sc(P), 0.0, pmax)[0]
    if lo > hi:
        return None
    return lo, hi


class _Problem:
    def __init__(self, cfg: ScenarioConfig, opts: OptimizerOptions):
        self.cfg = cfg
        self.opts = opts
        self.scale = np.where(cfg.P_d_max_i > 0, cfg.P_d_max_i, 1.0)
        self._lam_d = np.asarray(cfg.lambda_d, dtype=float)
        self._den0 = float(np.sum(cfg.lambda_d * 2.0 * cfg.P_cir))
        self._ee_coef = cfg.lambda_d * cfg.bandwidth_per_band * np.log2(1.0 + cfg.T_d)
        self.model_d = BandStpModel(cfg, "d2d", opts.method)
        self.model_c = BandStpModel(cfg, "bs", opts.method)
        self.intervals = [feasible_interval(cfg, i, opts.method,
                                            (self.model_d.curves[i], self.model_c.curves[i]))
                          for i in range(cfg.num_bands)]
        self.bracketed = all(iv is not None for iv in self.intervals)
        if self.bracketed:
            self.lo = np.array([iv[0] for iv in self.intervals])
            self.hi = np.array([iv[1] for iv in self.intervals])
            self.bracketed = math.fsum(self.lo) <= cfg.P_d_total
        if not self.bracketed:
            self.lo = np.zeros(cfg.num_bands)
            self.hi = cfg.P_d_max_i.copy()

    def project(self, p):
        return project_polytope(p, 0.0, self.cfg.P_d_max_i, self.cfg.P_d_total)

    def repair(self, p):
        """Move into the bracketed feasible set (exactly feasible if it exists)."""
        if self.bracketed:
            return project_polytope(p, self.lo, self.hi, self.cfg.P_d_total)
        return self.project(p)

    def stps(self, p):
        return self.model_d(p), self.model_c(p)

    def evaluate(self, p):
        """(EE, squared STP-floor violation) at ``p``; the fast inner-loop path."""
        sd, sc = self.stps(p)
        den = self._lam_d @ p + self._den0
        ee = float(self._ee_coef @ sd / den) if den > 0 else 0.0
        vd = np.minimum(sd - self.cfg.theta_d, 0.0)
        vc = np.minimum(sc - self.cfg.theta_c, 0.0)
        return ee, float(vd @ vd + vc @ vc)

    def starts(self):
        cfg, M = self.cfg, self.cfg.num_bands
        u = qmc.Sobol(d=M, scramble=True, seed=self.opts.seed).random(self.opts.starts)
        lo, hi = self.lo, np.minimum(self.hi, cfg.P_d_max_i)
        out = []
        for row in u:
            x = lo + row * (hi - lo)
            excess = math.fsum(x) - cfg.P_d_total
            if excess > 0:
                room = math.fsum(x - lo)
                x = lo + (x - lo) * max(0.0, (cfg.P_d_total - math.fsum(lo)) / room)
            out.append(self.project(x))
        return out


def _local_search(prob: _Problem, p0: np.ndarray, ee_ref: float, k: int):
    cfg, opts = prob.cfg, prob.opts
    x = p0 / prob.scale
    mu = opts.penalty0
    trace = {"start": k, "outer": [], "evals": 0}
    xatol = opts.simplex_tol / float(np.max(prob.scale))
    # with bracketed intervals the repaired set is exactly feasible, so the
    # penalty never fires and one round is enough
    rounds = 1 if prob.bracketed else opts.outer_iterations
    proj = prob.repair if prob.bracketed else prob.project

    for _ in range(rounds):
        def F(xv, mu=mu):
            p = xv * prob.scale
            q = proj(p)
            ee, viol = prob.evaluate(q)
            drift = float(np.sum(np.square((p - q) / prob.scale)))
            return -ee / ee_ref + mu * viol + drift

        res = optimize.minimize(F, x, method="Nelder-Mead",
                                options={"xatol": xatol, "fatol": opts.fatol,
                                         "maxfev": opts.max_inner_evals, "adaptive": True})
        x = proj(res.x * prob.scale) / prob.scale
        trace["outer"].append({"penalty": mu, "nfev": int(res.nfev), "fun": float(res.fun)})
        trace["evals"] += int(res.nfev)
        mu *= opts.penalty_growth
    return x * prob.scale, trace


def _round(p):
    return tuple(np.round(np.asarray(p) / 1e-9).astype(np.int64).tolist())


def optimize_ee(cfg: ScenarioConfig, options: OptimizerOptions | None = None) -> OptimizationOutcome:
    """
    Maximise EE over per-band D2D powers.

    Returns the best feasible point over all starts. When the constraints
    cannot all hold, ``feasible`` is False and ``p_opt`` is the point with
    the smallest squared constraint violation that was found.
    """
    opts = options or OptimizerOptions()
    prob = _Problem(cfg, opts)
    starts = prob.starts()

    def ee_of(p):
        return prob.evaluate(p)[0]

    start_pts = [prob.repair(s) for s in starts]
    start_ee = []
    for k, s in enumerate(start_pts):
        try:
            start_ee.append(ee_of(s))
        except Exception as exc:  # noqa: BLE001
            raise OptimizationError(f"evaluation failed at start point {k}: {exc}", {"start": k}) from exc
    ee_ref = max(max(start_ee), 1e-300)

    def run(k):
        try:
            p, tr = _local_search(prob, start_pts[k], ee_ref, k)
        except Exception as exc:  # noqa: BLE001 - re-raised with the partial trace
            raise OptimizationError(f"evaluation failed in start {k}: {exc}", {"start": k}) from exc
        return prob.repair(p), tr

    if opts.threads > 1:
        with ThreadPoolExecutor(opts.threads) as ex:
            results = list(ex.map(run, range(len(starts))))
    else:
        results = [run(k) for k in range(len(starts))]

    # start points stay candidates so the result never falls below them
    candidates = [r[0] for r in results] + start_pts
    traces = [r[1] for r in results]
    if opts.symmetrize:
        candidates += [_symmetrize(cfg, c, prob) for c in candidates[: len(results)]]

    scored = []
    for idx, c in enumerate(candidates):
        rep = check_feasibility(cfg, c, opts.method)
        try:
            ee = energy_efficiency(cfg, c, opts.method)
        except ZeroDivisionError:
            ee = 0.0
        scored.append((c, ee, rep, idx))

    feas = [s for s in scored if s[2].feasible()]
    if feas:
        best_ee = max(s[1] for s in feas)
        ties = [s for s in feas if s[1] >= best_ee * (1.0 - 1e-12)]
        c, ee, rep, idx = min(ties, key=lambda s: (_round(s[0]), s[3]))
        feasible = True
    else:
        c, ee, rep, idx = min(scored, key=lambda s: (s[2].violation(), _round(s[0]), s[3]))
        feasible = False
        log.info("no feasible allocation found; least violation %.3g", rep.violation())

    trace = {
        "starts": len(starts),
        "restarts": len(starts),
        "evaluations": sum(t["evals"] for t in traces) + len(start_pts),
        "bracketed": prob.bracketed,
        "intervals": [list(iv) if iv else None for iv in prob.intervals],
        "best_candidate": idx,
        "start_ee": start_ee,
        "runs": traces,
    }
    return OptimizationOutcome(PowerVector(c), float(ee), rep, feasible, trace)


def _symmetrize(cfg: ScenarioConfig, p, prob: _Problem):
    """Average powers over groups of bands with identical parameters."""
    p = np.array(p, dtype=float)
    seen = set()
    for i in range(cfg.num_bands):
        if i in seen:
            continue
        group = [j for j in range(i, cfg.num_bands) if cfg.bands_identical(i, j)]
        seen.update(group)
        p[group] = np.mean(p[group])
    return prob.repair(p)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_AXES = ("lambda_d_ref", "lambda_c_ref", "P_cir", "P_c", "P_d_band1", "theta_bw", "R_d")


def apply_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Scenario with one sweep parameter set (SI units)."""
    if axis == "lambda_d_ref":
        return cfg.replace(lambda_d=value)
    if axis == "lambda_c_ref":
        return cfg.replace(lambda_c=value)
    if axis == "P_cir":
        return cfg.replace(P_cir=value)
    if axis == "P_c":
        return cfg.replace(P_c_total=value)
    if axis == "theta_bw":
        return cfg.replace(theta_bw=value)
    if axis == "R_d":
        return cfg.replace(R_d=value)
    if axis == "P_d_band1":
        return cfg
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    ee: float
    stp_d: tuple
    stp_c: tuple
    feasible: bool
    p: tuple
    ee_mc: float | None = None
    ee_mc_half_width: float | None = None


def sweep_ee(cfg: ScenarioConfig, axis: str, grid: Sequence[float], *, mode: str = "optimize",
             p=None, options: OptimizerOptions | None = None, mc_plan=None) -> list[SweepRow]:
    """
    EE along one parameter axis.

    ``mode='optimize'`` re-solves the allocation at every grid point;
    ``mode='fixed'`` evaluates the power vector ``p`` (default: uniform).
    The ``P_d_band1`` axis always holds the other bands at ``p``.
    Passing a :class:`SimulationPlan` adds a Monte Carlo EE column.
    """
    from .montecarlo import estimate_ee

    grid = [float(g) for g in grid]
    if len(grid) > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sweep grid must be strictly monotone")
    opts = options or OptimizerOptions()
    rows = []
    for value in grid:
        c = apply_axis(cfg, axis, value)
        if axis == "P_d_band1" or mode == "fixed":
            pv = np.array(PowerVector.uniform(c).p if p is None else np.asarray(p, float))
            if axis == "P_d_band1":
                pv[0] = value
            rep = check_feasibility(c, pv, opts.method)
            sd = rep.stp_d + c.theta_d
            sc = rep.stp_c + c.theta_c
            ee = ee_from_stp(c, pv, sd)
            feasible = rep.feasible()
        elif mode == "optimize":
            out = optimize_ee(c, opts)
            pv = out.p_opt.p
            sd = out.constraint_slacks.stp_d + c.theta_d
            sc = out.constraint_slacks.stp_c + c.theta_c
            ee, feasible = out.ee_opt, out.feasible
        else:
            raise ValueError(f"mode must be 'optimize' or 'fixed', got {mode!r}")
        ee_mc = hw = None
        if mc_plan is not None:
            est = estimate_ee(c, pv, mc_plan)
            ee_mc, hw = est.mean, est.half_width_95
        rows.append(SweepRow(value, float(ee), tuple(map(float, sd)), tuple(map(float, sc)),
                             bool(feasible), tuple(map(float, pv)), ee_mc, hw))
    return rows
