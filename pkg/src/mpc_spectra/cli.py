"""Command-line front end.

Exit codes: 0 success, 1 domain error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bounds, complexity, condense, figures, precond, scaling
from .errors import MpcSpectraError
from .fileio import load_problem, write_csv, write_matrix_csv
from .model import spectral_radius, stacked_weight_margin, with_changes
from .symbol import (
    UnitCircleGrid,
    constraint_symbol,
    dual_symbol,
    prediction_symbol,
    primal_symbol,
    spectrum_estimate,
)


class UsageError(Exception):
    pass


def log_grid(spec: str) -> np.ndarray:
    """'min:max:count' -> log-spaced values; a bare number is a one-point grid."""
    try:
        parts = [float(v) for v in spec.split(":")]
    except ValueError:
        raise UsageError(f"bad grid {spec!r}, expected min:max:count") from None
    if len(parts) == 1:
        parts = [parts[0], parts[0], 1]
    if len(parts) != 3 or parts[0] <= 0 or parts[1] <= 0 or parts[2] < 1 or parts[2] != int(parts[2]):
        raise UsageError(f"bad grid {spec!r}, expected positive min:max:count")
    return np.logspace(np.log10(parts[0]), np.log10(parts[1]), int(parts[2]))


def int_list(spec: str) -> list[int]:
    try:
        out = [int(v) for v in spec.split(",") if v]
    except ValueError:
        raise UsageError(f"bad integer list {spec!r}") from None
    if not out or min(out) < 1:
        raise UsageError(f"horizons must be positive integers, got {spec!r}")
    return out


def float_list(spec: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in spec.split(",") if v])
    except ValueError:
        raise UsageError(f"bad number list {spec!r}") from None


def _grid(args) -> UnitCircleGrid:
    pts = args.grid_points or int(os.environ.get("MPC_SPECTRA_GRID", 4096))
    try:
        return UnitCircleGrid(pts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _out(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def cmd_validate(args) -> None:
    p = load_problem(args.problem)
    c = p.constraints
    print(f"n = {p.n}, m = {p.m}, state rows j = {c.j}, input rows l = {c.l}")
    print(f"spectral radius of A = {spectral_radius(p.A):.12g}")
    print(f"stacked weight margin lambda_min/lambda_max = {stacked_weight_margin(p.Q, p.R, p.S):.6g}")
    print(f"lambda_min(R) = {np.linalg.eigvalsh(p.R)[0]:.6g}, lambda_min(P) = {np.linalg.eigvalsh(p.P)[0]:.6g}")
    print(f"terminal policy = {p.weights.terminal_policy}, cross term = {'yes' if p.has_cross_term else 'no'}")


def cmd_condense(args) -> None:
    p = load_problem(args.problem)
    out = _out(args, "condensed")
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(condense.build_primal(p, args.horizon).H, out / "H_c.csv")
    written = ["H_c.csv"]
    if p.constraints.count:
        write_matrix_csv(condense.build_constraints(p, args.horizon).G, out / "G.csv")
        write_matrix_csv(condense.build_dual(p, args.horizon).H, out / "H_d.csv")
        written += ["G.csv", "H_d.csv"]
    print("wrote " + ", ".join(str(out / w) for w in written))


def cmd_spectrum(args) -> None:
    p = load_problem(args.problem)
    op = args.operator
    if op == "prediction":
        s, kind = prediction_symbol(p), "singular"
    elif op == "primal":
        s, kind = primal_symbol(p), "eigen"
    elif op == "constraint":
        s, kind = constraint_symbol(p), "singular"
    else:
        s, kind = dual_symbol(p, allow_cross=True), "eigen"
    est = spectrum_estimate(s, args.horizon, kind)
    rows = [[w, i, v, kind] for w, vals in zip(est.omegas, est.values) for i, v in enumerate(vals)]
    path = _out(args, f"spectrum_{op}.csv")
    write_csv(["omega", "value_index", "value", "kind"], rows, path)
    print(f"wrote {path}")


def cmd_bounds(args) -> None:
    p = load_problem(args.problem)
    g = _grid(args)
    rows = []
    for b in bounds.all_bounds(p, g):
        if b.tag == "Dual":
            rows.append([b.tag, b.lower, b.details["prop2"], float("inf"), b.grid_points, "prop2"])
            if "thm4" in b.details:
                rows.append([b.tag, b.lower, b.details["thm4"], float("inf"), b.grid_points, "thm4"])
        else:
            rows.append([b.tag, b.lower, b.upper, b.condition_limit, b.grid_points, b.method])
        for note in b.notes:
            print(f"note ({b.tag}): {note}", file=sys.stderr)
    path = _out(args, "bounds.csv")
    write_csv(["tag", "lower", "upper", "condition_limit", "grid_points", "method"], rows, path)
    for r in rows:
        print(",".join(str(v) for v in r))


def cmd_scaling_sweep(args) -> None:
    p = load_problem(args.problem)
    g = _grid(args)
    a1s = log_grid(args.alpha1_grid)
    a2s = log_grid(args.alpha2_grid)
    if args.mode == "absolute":
        pairs = [(a, a) for a in a1s]
    else:
        pairs = [(a1, a2) for a1 in a1s for a2 in a2s]
    base = scaling.trace_limits(p, g)
    rows = []
    for a1, a2 in pairs:
        q = scaling.scaled_problem(p, a1, a2)
        if p.continuous is None:
            t = scaling.scale_trace_limits(base, scaling.ScalingTriple(a1, a2, float(np.sqrt(a1 * a2))))
        else:
            t = scaling.trace_limits(q, g)
        klb = scaling.condition_lower_bound(t)
        b = bounds.primal_bounds(q, g)
        rows.append([a1, a2, t.a_l, t.b_l, klb, b.condition_limit, b.lower, b.upper])
    path = _out(args, "scaling_sweep.csv")
    write_csv(["alpha1", "alpha2", "a_l", "b_l", "kappa_lower_bound", "kappa_symbol_limit",
               "lambda_min_symbol", "lambda_max_symbol"], rows, path)
    print(f"wrote {path} ({len(rows)} rows)")


def cmd_uib(args) -> None:
    p = load_problem(args.problem)
    if args.algorithm == "fgm":
        cfg = complexity.fgm_auto_constants(p, args.delta_max, args.norm)
        print(f"epsilon = {cfg.epsilon:.6g}, Delta = {cfg.Delta:.6g}, kappa = {cfg.kappa:.6g}")
        print(f"UIB = {complexity.fgm_uib(cfg)}")
        print(f"simplified UIB = {complexity.fgm_simplified_uib(cfg.kappa)}")
    else:
        if args.udb is None:
            raise UsageError("--udb is required for the dgp bound")
        db = bounds.dual_bounds(p)
        cfg = complexity.DgpConfig(db.upper, db.details["primal"].upper, args.udb, args.eps_g,
                                   args.eps_z, args.eps_xi, args.alpha)
        print(f"L = {cfg.L:.6g} ({db.method}), L_V = {cfg.L_V:.6g}, D = {cfg.D:g}")
        print(f"UIB = {complexity.dgp_uib(cfg)}")


def cmd_simulate(args) -> None:
    p = load_problem(args.problem)
    if args.algorithm == "fgm" and p.constraints.j:
        print("note: dropping state constraints for the projection solver", file=sys.stderr)
        p = with_changes(p, D=None, cx=None)
    x0 = float_list(args.x0) if args.x0 else np.full(p.n, 0.1)
    if x0.size != p.n:
        raise UsageError(f"--x0 needs {p.n} entries, got {x0.size}")
    alphas = log_grid(args.alpha1_grid)
    rows = complexity.scaling_experiment(p, alphas, args.algorithm, args.horizon, x0, args.steps, udb=args.udb,
                                         eps_g=args.eps_g)
    path = _out(args, f"simulate_{args.algorithm}.csv")
    write_csv(list(complexity.CSV_COLUMNS), [complexity.row_to_csv(r) for r in rows], path)
    for r in rows:
        print(f"alpha1 = {r.scaling:.3g}: UIB = {r.uib}, ||x|| = {r.state_norm:.6g}, ||u|| = {r.input_norm:.6g}, "
              f"max iterations = {r.iterations}, settling = {r.settling}")
    print(f"wrote {path}")


def cmd_precondition(args) -> None:
    p = load_problem(args.problem)
    pc = precond.design_block_preconditioner(p)
    out = _out(args, "precondition")
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(pc.L, out / "L.csv")
    rows = []
    for N in int_list(args.horizons):
        raw = precond.condition_number(condense.build_primal(p, N).H)
        pre = precond.condition_number(precond.preconditioned_hessian(p, N, pc))
        rows.append([N, raw, pre])
    write_csv(["N", "kappa_raw", "kappa_precond"], rows, out / "kappa.csv")
    pb = precond.preconditioned_bounds(p, pc)
    print(f"symbol condition limit: raw {pb.details['raw'].condition_limit:.6g}, "
          f"preconditioned {pb.condition_limit:.6g}")
    print(f"wrote {out / 'L.csv'}, {out / 'kappa.csv'}")


def cmd_reproduce_figure(args) -> None:
    if args.figure == 1:
        raise MpcSpectraError("figure 1 is a schematic of the mass chain and has no data")
    if args.figure not in figures.FIGURES:
        raise UsageError(f"unknown figure {args.figure}; choose 1-9")
    p = load_problem(args.problem)
    kw = {}
    if args.figure in (6, 7):
        if args.udb is not None:
            kw["udb"] = args.udb
        kw["simulate"] = args.simulate
    tables = figures.FIGURES[args.figure](p, **kw)
    written = figures.emit(tables, _out(args, f"figure{args.figure}"), svg=not args.no_svg)
    for w in written:
        print(f"wrote {w}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpc-spectra", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("problem", help="problem JSON (system1.json / system2.json resolve to bundled files)")
        sp.add_argument("--out", help="output file or directory")
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "check a problem file and print its margins")
    sp = add("condense", cmd_condense, "dump H_c, G and H_d as CSV")
    sp.add_argument("--horizon", type=int, default=10)
    sp = add("spectrum", cmd_spectrum, "symbol values at the horizon's frequency set")
    sp.add_argument("--operator", choices=("prediction", "primal", "constraint", "dual"), default="primal")
    sp.add_argument("--horizon", type=int, default=20)
    sp = add("bounds", cmd_bounds, "horizon-independent bounds for every operator")
    sp.add_argument("--grid-points", type=int)
    sp = add("scaling-sweep", cmd_scaling_sweep, "trace limits and condition bounds over weight scalings")
    sp.add_argument("--alpha1-grid", default="1e-4:1e4:9")
    sp.add_argument("--alpha2-grid", default="1")
    sp.add_argument("--mode", choices=("relative", "absolute"), default="relative",
                    help="relative: every (alpha1, alpha2) pair; absolute: alpha2 = alpha1")
    sp.add_argument("--grid-points", type=int)
    sp = add("uib", cmd_uib, "upper iteration bound for FGM or DGP")
    sp.add_argument("--algorithm", choices=("fgm", "dgp"), default="fgm")
    sp.add_argument("--delta-max", type=float, default=1e-3)
    sp.add_argument("--norm", choices=("spectral", "fro"), default="spectral")
    sp.add_argument("--udb", type=float)
    sp.add_argument("--eps-g", type=float, default=1e-4)
    sp.add_argument("--eps-z", type=float, default=0.0)
    sp.add_argument("--eps-xi", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=2.0)
    sp = add("simulate", cmd_simulate, "closed-loop runs over a Q-scaling grid")
    sp.add_argument("--algorithm", choices=("fgm", "dgp"), default="fgm")
    sp.add_argument("--x0", help="comma-separated initial state (default 0.1 everywhere)")
    sp.add_argument("--steps", type=int, default=60)
    sp.add_argument("--horizon", type=int, default=20)
    sp.add_argument("--alpha1-grid", default="1e-4:1e4:9")
    sp.add_argument("--udb", type=float)
    sp.add_argument("--eps-g", type=float, default=1e-4)
    sp = add("precondition", cmd_precondition, "block preconditioner and condition numbers")
    sp.add_argument("--horizons", default="5,10,20,40")

    sp = sub.add_parser("reproduce-figure", help="CSV (and SVG) data for a figure")
    sp.add_argument("figure", type=int)
    sp.add_argument("problem")
    sp.add_argument("--out")
    sp.add_argument("--udb", type=float)
    sp.add_argument("--simulate", action="store_true", help="also run the DGP closed loop (figures 6-7)")
    sp.add_argument("--no-svg", action="store_true")
    sp.set_defaults(func=cmd_reproduce_figure)
    return ap


def run(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except MpcSpectraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
