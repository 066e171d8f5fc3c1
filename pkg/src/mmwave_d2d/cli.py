"""
Command-line front end.

    mmwave-d2d [--scenario FILE] [--seed S] [--threads N] [--out PREFIX] \\
        {stp,validate,optimize,sweep} ...

The global flags may also be given after the subcommand. Every command
that writes a CSV writes ``PREFIX.csv`` plus ``PREFIX.manifest.json``;
the default prefix is the subcommand name. File and flag values use mW,
m, MHz and dB; everything inside is linear SI.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
4 no feasible allocation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import QuadratureError, UnsupportedModelError, stp
from .config import ConfigError, PowerVector, ScenarioConfig, load_scenario, scenario_hash, scenario_to_dict
from .montecarlo import SimulationPlan, estimate_stp
from .optimizer import SWEEP_AXES, OptimizationError, OptimizerOptions, optimize_ee, sweep_ee

__all__ = ["main", "build_parser", "BOUND_GAP_BUDGET"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4

# allowed analytic-minus-simulation slack on top of the 95% interval; the
# analytic STP rests on a bound of the gamma CDF
BOUND_GAP_BUDGET = 0.03

# sweep axes given in mW at the command line
_MW_AXES = {"P_cir", "P_c", "P_d_band1"}

log = logging.getLogger("mmwave_d2d")


class _NumericFailure(Exception):
    pass


def _fmt(x) -> str:
    """Shortest round-trip text for a float; stable across platforms."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_outputs(prefix: str, header, rows, provenance: dict, cfg: ScenarioConfig,
                  args, started: str, extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``prefix.csv`` and its manifest; returns both paths."""
    text = _render_csv(header, rows)
    csv_path = Path(f"{prefix}.csv")
    man_path = Path(f"{prefix}.manifest.json")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_bytes(text.encode("utf-8"))
    manifest = {
        "tool": "mmwave-d2d",
        "tool_version": __version__,
        "command": args.command,
        "argv": list(args.argv),
        "scenario_file": str(args.scenario) if args.scenario else None,
        "config_hash": scenario_hash(cfg),
        "resolved_scenario_si": scenario_to_dict(cfg),
        "seed": args.seed,
        "threads": args.threads,
        "started_utc": started,
        "finished_utc": _now(),
        "csv": csv_path.name,
        "csv_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "columns": {col: provenance.get(col, "input") for col in header},
    }
    if extra:
        manifest.update(extra)
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, man_path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load(args) -> ScenarioConfig:
    if not args.scenario:
        raise ConfigError("no scenario file given (use --scenario FILE)")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = load_scenario(args.scenario)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return cfg


def _power_vector(cfg: ScenarioConfig, pd_mw) -> np.ndarray:
    if pd_mw is None:
        return PowerVector.uniform(cfg).p.copy()
    if pd_mw < 0:
        raise ConfigError("--pd must be >= 0")
    return np.full(cfg.num_bands, pd_mw * 1e-3)


def _band_index(cfg: ScenarioConfig, band: int) -> int:
    if not 1 <= band <= cfg.num_bands:
        raise ConfigError(f"--band must be in 1..{cfg.num_bands}, got {band}")
    return band - 1


def _plan(args, realizations: int) -> SimulationPlan:
    if realizations < 1:
        raise ConfigError("--realizations must be >= 1")
    return SimulationPlan(realizations=realizations, seed=args.seed, threads=args.threads)


# ---------------------------------------------------------------------------
# subcommands

def cmd_stp(args) -> int:
    cfg = _load(args)
    i = _band_index(cfg, args.band)
    p = _power_vector(cfg, args.pd)
    if args.who == "d2d" and p[i] == 0.0:
        print("warning: zero D2D transmit power, the D2D link is in outage", file=sys.stderr)
    if args.method == "mc":
        est = estimate_stp(cfg, p, i, args.who, _plan(args, args.realizations))
        value, method, err = est.mean, "monte_carlo", est.half_width_95
    else:
        method_arg = args.method
        if method_arg == "closed":
            if cfg.nakagami_m not in (1, 2):
                raise ConfigError(f"no closed form for nakagami_m = {cfg.nakagami_m}")
            method_arg = f"closed_form_m{cfg.nakagami_m}"
        res = stp(cfg, float(p[i]), i, args.who, method_arg)
        value, method, err = res.value, res.method, res.abs_err_est
    print(f"band {args.band} {args.who}: STP = {value:.6f}  method = {method}  abs_err_est = {err:.3g}")
    header = ["band", "who", "p_d_mw", "stp", "method", "abs_err_est"]
    rows = [[args.band, args.who, p[i] * 1e3, value, method, err]]
    prov = {"stp": method, "abs_err_est": "quadrature error / closed form 0 / MC 95% half width",
            "p_d_mw": "--pd or largest equal split"}
    write_outputs(args.out or "stp", header, rows, prov, cfg, args, args.started)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    p = _power_vector(cfg, args.pd)
    plan = _plan(args, args.realizations)
    header = ["band", "who", "analytic_stp", "mc_stp", "ci", "gap", "ok"]
    rows, flagged, methods = [], 0, set()
    for who in ("d2d", "bs"):
        for i in range(cfg.num_bands):
            a = stp(cfg, float(p[i]), i, who, "auto")
            methods.add(a.method)
            e = estimate_stp(cfg, p, i, who, plan)
            gap = a.value - e.mean
            ok = abs(gap) <= e.half_width_95 + BOUND_GAP_BUDGET
            flagged += not ok
            rows.append([i + 1, who, a.value, e.mean, e.half_width_95, gap, ok])
    for r in rows:
        print(f"band {r[0]} {r[1]:>3}: analytic {r[2]:.4f}  mc {r[3]:.4f} +- {r[4]:.4f}  "
              f"gap {r[5]:+.4f}  {'OK' if r[6] else 'FLAG'}")
    print(f"{flagged} flagged of {len(rows)} (budget {BOUND_GAP_BUDGET} + 95% CI)")
    prov = {"analytic_stp": "analytic: " + ", ".join(sorted(methods)),
            "mc_stp": f"monte_carlo, {plan.realizations} realizations, seed {plan.seed}",
            "ci": "95% normal half width", "gap": "analytic_stp - mc_stp",
            "ok": f"|gap| <= ci + {BOUND_GAP_BUDGET}"}
    write_outputs(args.out or "validate", header, rows, prov, cfg, args, args.started,
                  {"flagged": flagged})
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load(args)
    opts = OptimizerOptions(seed=args.seed, threads=args.threads, starts=args.starts)
    try:
        out = optimize_ee(cfg, opts)
    except OptimizationError as exc:
        raise _NumericFailure(str(exc)) from exc
    s = out.constraint_slacks
    header = ["band", "p_opt_mw", "stp_d", "stp_c", "slack_stp_d", "slack_stp_c",
              "slack_box_lower_mw", "slack_box_upper_mw", "slack_budget_mw", "ee_bit_per_j", "feasible"]
    rows = []
    for i in range(cfg.num_bands):
        rows.append([i + 1, out.p_opt.p[i] * 1e3, s.stp_d[i] + cfg.theta_d[i], s.stp_c[i] + cfg.theta_c[i],
                     s.stp_d[i], s.stp_c[i], s.box_lower[i] * 1e3, s.box_upper[i] * 1e3,
                     s.budget * 1e3, out.ee_opt, out.feasible])
    verdict = "feasible" if out.feasible else "INFEASIBLE (least-violating point written)"
    print(f"EE = {out.ee_opt:.6g} bit/J  {verdict}")
    print("p_opt (mW): " + ", ".join(f"{x * 1e3:.6g}" for x in out.p_opt.p))
    prov = {"p_opt_mw": "multi-start penalty Nelder-Mead, repaired into bisected feasible intervals",
            "stp_d": "analytic (auto)", "stp_c": "analytic (auto)",
            "ee_bit_per_j": "analytic EE at p_opt", "feasible": "all slacks >= -1e-6 (STP), -1e-9 W (power)"}
    tr = out.solver_trace
    write_outputs(args.out or "optimize", header, rows, prov, cfg, args, args.started,
                  {"solver": {k: tr[k] for k in ("starts", "evaluations", "bracketed", "best_candidate")}})
    return EXIT_OK if out.feasible else EXIT_INFEASIBLE


def _grid(args) -> list[float]:
    if args.points < 0:
        raise ConfigError("--points must be >= 0")
    if args.points == 0:
        return []
    if args.points > 1 and args.start == args.stop:
        raise ConfigError("--from and --to must differ")
    if args.log:
        if args.start <= 0 or args.stop <= 0:
            raise ConfigError("--log needs positive --from/--to")
        return list(np.geomspace(args.start, args.stop, args.points))
    return list(np.linspace(args.start, args.stop, args.points))


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.axis not in SWEEP_AXES:
        raise ConfigError(f"unknown axis {args.axis!r}; choose from {', '.join(SWEEP_AXES)}")
    grid = _grid(args)
    scale = 1e-3 if args.axis in _MW_AXES else 1.0
    p = None if args.pd is None else _power_vector(cfg, args.pd)
    mode = "fixed" if args.fixed else "optimize"
    plan = _plan(args, args.realizations) if args.mc else None
    opts = OptimizerOptions(seed=args.seed, threads=args.threads, starts=args.starts)
    try:
        rows_ = sweep_ee(cfg, args.axis, [g * scale for g in grid], mode=mode, p=p,
                         options=opts, mc_plan=plan)
    except OptimizationError as exc:
        raise _NumericFailure(str(exc)) from exc
    M = cfg.num_bands
    header = (["axis_value", "ee"] + [f"stp_d_{i + 1}" for i in range(M)]
              + [f"stp_c_{i + 1}" for i in range(M)] + ["feasible"]
              + [f"p_{i + 1}_mw" for i in range(M)])
    if args.mc:
        header += ["ee_mc", "ee_mc_ci"]
    rows = []
    for g, r in zip(grid, rows_):
        row = [g, r.ee, *r.stp_d, *r.stp_c, r.feasible, *(x * 1e3 for x in r.p)]
        if args.mc:
            row += [r.ee_mc, r.ee_mc_half_width]
        rows.append(row)
        print(f"{args.axis} = {g:.6g}: EE = {r.ee:.6g} bit/J{'' if r.feasible else '  (infeasible)'}")
    unit = "mW" if scale != 1.0 else ("users/m^2" if args.axis.startswith("lambda") else
                                      "rad" if args.axis == "theta_bw" else "m")
    prov = {"axis_value": f"{args.axis} in {unit}",
            "ee": f"analytic EE, {'optimised allocation' if mode == 'optimize' and args.axis != 'P_d_band1' else 'fixed allocation'}",
            "feasible": "all constraint slacks within tolerance",
            "ee_mc": "monte_carlo EE at the same allocation", "ee_mc_ci": "95% delta-method half width"}
    for i in range(M):
        prov[f"stp_d_{i + 1}"] = prov[f"stp_c_{i + 1}"] = "analytic (auto)"
        prov[f"p_{i + 1}_mw"] = "allocation evaluated"
    write_outputs(args.out or "sweep", header, rows, prov, cfg, args, args.started,
                  {"axis": args.axis, "mode": mode})
    return EXIT_OK


# ---------------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--scenario", default=d(None), help="JSON scenario file")
    parser.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    parser.add_argument("--threads", type=int, default=d(1), help="worker threads (default 1)")
    parser.add_argument("--out", default=d(None), help="output prefix (default: subcommand name)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwave-d2d", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stp", help="STP of one band")
    s.add_argument("--band", type=int, default=1, help="band number, 1-based")
    s.add_argument("--who", choices=("d2d", "bs"), default="d2d")
    s.add_argument("--method", choices=("auto", "quadrature", "closed", "mc"), default="auto")
    s.add_argument("--pd", type=float, default=None, help="D2D power in mW on every band (default: largest equal split)")
    s.add_argument("--realizations", type=int, default=10000, help="for --method mc")
    s.set_defaults(func=cmd_stp)

    v = sub.add_parser("validate", help="analytic STP against Monte Carlo, every band")
    v.add_argument("--realizations", type=int, default=1000)
    v.add_argument("--pd", type=float, default=None, help="D2D power in mW on every band (default: largest equal split)")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("optimize", help="EE-optimal D2D power allocation")
    o.add_argument("--starts", type=int, default=16)
    o.set_defaults(func=cmd_optimize)

    w = sub.add_parser("sweep", help="EE along one parameter axis")
    w.add_argument("--axis", required=True, choices=SWEEP_AXES)
    w.add_argument("--from", dest="start", type=float, default=0.0)
    w.add_argument("--to", dest="stop", type=float, default=0.0)
    w.add_argument("--points", type=int, default=10)
    w.add_argument("--log", action="store_true", help="geometric grid")
    w.add_argument("--fixed", action="store_true", help="evaluate a fixed allocation instead of optimising")
    w.add_argument("--pd", type=float, default=None, help="fixed D2D power in mW")
    w.add_argument("--starts", type=int, default=16)
    g = w.add_mutually_exclusive_group()
    g.add_argument("--mc", action="store_true", help="add a Monte Carlo EE column")
    g.add_argument("--analytic", dest="mc", action="store_false", help="analytic only (default)")
    w.add_argument("--realizations", type=int, default=1000)
    w.set_defaults(func=cmd_sweep)

    for p in (s, v, o, w):
        _global_flags(p, suppress=True)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    args.started = _now()
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, UnsupportedModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, _NumericFailure, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
