"""Data tables behind each figure, plus a bare-bones SVG line plot.

Figure numbers: 2 primal spectra vs horizon, 3 dual lambda_max vs horizon,
4 scaled-weight eigenvalue/condition bounds, 5 FGM scaling experiment,
6 DGP scaling on the first system, 7 DGP scaling on the chain,
8 preconditioned condition number vs horizon, 9 preconditioning under scaling.
Figure 1 is a diagram and has no data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bounds, condense, complexity, precond, scaling
from .errors import InvalidConfig
from .fileio import write_csv
from .model import Problem, with_changes

DEFAULT_HORIZONS = (2, 5, 10, 15, 20, 25, 30, 40, 50, 60)
DEFAULT_ALPHAS = tuple(10.0 ** k for k in range(-4, 5))


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list] = field(default_factory=list)
    x: str = ""
    ys: tuple[str, ...] = ()
    logx: bool = False
    logy: bool = False

    def column(self, key: str) -> np.ndarray:
        i = self.header.index(key)
        return np.array([np.nan if r[i] == "" else float(r[i]) for r in self.rows])


def _variant(p: Problem, **changes) -> Problem:
    return with_changes(p, **changes)


def _input_only(p: Problem) -> Problem:
    return _variant(p, D=None, cx=None)


def _state_only(p: Problem) -> Problem:
    return _variant(p, E=None, cu=None)


def figure2(p: Problem, horizons: Sequence[int] = DEFAULT_HORIZONS) -> list[Table]:
    """Instantaneous and asymptotic extremal eigenvalues / condition numbers of H_c."""
    S0 = np.zeros_like(p.S)
    cases = [("Q", _variant(p, S=S0, terminal="q")), ("Lyap", _variant(p, S=S0, terminal="lyapunov"))]
    if p.has_cross_term:
        cases.append(("S", _variant(p, terminal="lyapunov")))
    cols = ["Horizon"] + [f"{k}_{tag}" for tag, _ in cases for k in ("minE", "maxE", "condNum")]
    inst = Table("primal_inst", cols, x="Horizon", ys=tuple(c for c in cols if c.startswith("maxE")), logy=True)
    asym = Table("primal_asymp", cols, x="Horizon", ys=inst.ys, logy=True)
    lim = []
    for _, q in cases:
        b = bounds.primal_bounds(q)
        lim += [b.lower, b.upper, b.condition_limit]
    for N in horizons:
        row = [N]
        for _, q in cases:
            ev = condense.dense_spectrum(condense.build_primal(q, N).H)
            row += [ev[0], ev[-1], ev[-1] / ev[0]]
        inst.rows.append(row)
        asym.rows.append([N] + lim)
    return [inst, asym]


def _constraint_variants(p: Problem) -> list[tuple[str, Problem]]:
    c = p.constraints
    out = []
    if c.l:
        out.append(("I", _input_only(p) if c.j else p))
    if c.j:
        out.append(("S", _state_only(p) if c.l else p))
    if c.j and c.l:
        out.append(("IS", p))
    if not out:
        raise InvalidConfig("dual figures need constraints")
    return out


def figure3(p: Problem, horizons: Sequence[int] = DEFAULT_HORIZONS) -> list[Table]:
    """lambda_max(H_d) per constraint set against the symbol and H-infinity limits."""
    variants = _constraint_variants(p)
    inst = Table("dual_inst", ["Horizon"] + [f"maxE_{t}" for t, _ in variants], x="Horizon",
                 ys=tuple(f"maxE_{t}" for t, _ in variants))
    acols = ["Horizon"] + [f"maxE_{t}_{k}" for t, _ in variants for k in ("eig", "svd")]
    asym = Table("dual_asymp", acols, x="Horizon", ys=tuple(acols[1:]))
    lim = []
    for _, q in variants:
        d = bounds.dual_bounds(q)
        lim += [d.details.get("thm4", d.upper), d.details.get("hinf", d.upper)]
    for N in horizons:
        inst.rows.append([N] + [condense.dense_spectrum(condense.build_dual(q, N).H)[-1] for _, q in variants])
        asym.rows.append([N] + lim)
    return [inst, asym]


def figure4(p: Problem, alphas: Sequence[float] = DEFAULT_ALPHAS) -> list[Table]:
    """Symbol extrema and condition number against the trace-based bounds.

    "absolute" scales Q and R together, "relative" scales Q only.
    """
    base = scaling.trace_limits(p)
    out = []
    cols = ["Scaling", "minE", "maxE", "minE_ub", "maxE_lb", "K", "K_lb"]
    for mode in ("absolute", "relative"):
        t = Table(f"weight_scaling_{mode}", cols, x="Scaling", ys=("K", "K_lb"), logx=True, logy=True)
        for a in alphas:
            a2 = a if mode == "absolute" else 1.0
            q = scaling.scaled_problem(p, a, a2)
            b = bounds.primal_bounds(q)
            if p.continuous is None:
                tl = scaling.scale_trace_limits(base, scaling.ScalingTriple(a, a2, math.sqrt(a * a2)))
            else:
                tl = scaling.trace_limits(q)
            klb = (scaling.scaled_condition_lower_bound(base, a, a2) if not tl.has_cross_term
                   else scaling.condition_lower_bound(tl))
            t.rows.append([a, b.lower, b.upper, tl.a_l, tl.a_l, b.condition_limit, klb])
        out.append(t)
    return out


def _experiment_table(name: str, rows: list[complexity.ExperimentRow]) -> Table:
    t = Table(name, list(complexity.CSV_COLUMNS), x="Scaling", ys=("pdiffInput", "pdiffState", "pdiffIter"),
              logx=True)
    t.rows = [list(complexity.row_to_csv(r)) for r in rows]
    return t


def figure5(p: Problem, alphas: Sequence[float] = DEFAULT_ALPHAS, N: int = 20, steps: int = 60,
            x0=None) -> list[Table]:
    q = _input_only(p) if p.constraints.j else p
    rows = complexity.scaling_experiment(q, alphas, "fgm", N, x0, steps)
    t = _experiment_table("complexity_fgm", rows)
    u = Table("complexity_fgm_uib", ["Scaling", "UIB", "kappa"], x="Scaling", ys=("UIB",), logx=True)
    u.rows = [[r.scaling, r.uib, r.extra["kappa"]] for r in rows]
    return [t, u]


def _dgp_tables(name: str, p: Problem, alphas, N, udb, eps_g, simulate, x0, steps) -> list[Table]:
    cols = ["Scaling", "asymp_maxE_d", "actual_maxE_d", "subMult_maxE_d", "UDB", "UIB", "UIB_subMult"]
    info = Table(name + "_bounds", cols, x="Scaling", ys=("UIB", "UIB_subMult"), logx=True, logy=True)
    for a in alphas:
        q = scaling.scaled_problem(p, a)
        db = bounds.dual_bounds(q)
        Hd = condense.build_dual(q, N).H
        G = condense.build_constraints(q, N).G
        Hc = condense.build_primal(q, N).H
        sub = np.linalg.norm(G, 2) ** 2 / condense.dense_spectrum(Hc)[0]
        D = udb if udb is not None else complexity.estimate_udb(q, N, samples=10)
        LV = db.details["primal"].upper
        uib = complexity.dgp_uib(complexity.DgpConfig(db.upper, LV, D, eps_g, eps_V=1e-2))
        uib_sub = complexity.dgp_uib(complexity.DgpConfig(sub, LV, D, eps_g, eps_V=1e-2))
        info.rows.append([a, db.upper, condense.dense_spectrum(Hd)[-1], sub, D, uib, uib_sub])
    out = [info]
    if simulate:
        rows = complexity.scaling_experiment(p, alphas, "dgp", N, x0, steps, udb=max(r[4] for r in info.rows),
                                             eps_g=eps_g)
        out.append(_experiment_table(name, rows))
    return out


def figure6(p: Problem, alphas: Sequence[float] = DEFAULT_ALPHAS, N: int = 20, udb: Optional[float] = None,
            eps_g: float = 1e-4, simulate: bool = True, x0=None, steps: int = 60) -> list[Table]:
    q = _input_only(p) if p.constraints.j and p.constraints.l else p
    return _dgp_tables("complexity_dgp_sys1", q, alphas, N, udb, eps_g, simulate, x0, steps)


def figure7(p: Problem, alphas: Sequence[float] = DEFAULT_ALPHAS, N: int = 20, udb: Optional[float] = 20000.0,
            eps_g: float = 1e-4, simulate: bool = False, x0=None, steps: int = 60) -> list[Table]:
    return _dgp_tables("complexity_dgp_sys2", p, alphas, N, udb, eps_g, simulate, x0, steps)


def figure8(p: Problem, horizons: Sequence[int] = DEFAULT_HORIZONS) -> list[Table]:
    pc = precond.design_block_preconditioner(p)
    t = Table("precond_spectrum", ["Horizon", "ActualK", "Precond_C_K", "Precond_O_K"], x="Horizon",
              ys=("ActualK", "Precond_C_K"), logy=True)
    for N in horizons:
        raw = precond.condition_number(condense.build_primal(p, N).H)
        pre = precond.condition_number(precond.preconditioned_hessian(p, N, pc))
        t.rows.append([N, raw, pre, ""])
    return [t]


def figure9(p: Problem, alphas: Sequence[float] = DEFAULT_ALPHAS) -> list[Table]:
    cols = ["Scaling", "minE_actual", "maxE_actual", "ActualK", "minE_C_precond", "maxE_C_precond",
            "Precond_C_K", "minE_O_precond", "maxE_O_precond", "Precond_O_K"]
    t = Table("precond_weight_scaling", cols, x="Scaling", ys=("ActualK", "Precond_C_K"), logx=True, logy=True)
    for a in alphas:
        q = scaling.scaled_problem(p, a)
        pb = precond.preconditioned_bounds(q)
        raw = pb.details["raw"]
        t.rows.append([a, raw.lower, raw.upper, raw.condition_limit, pb.lower, pb.upper, pb.condition_limit,
                       "", "", ""])
    return [t]


FIGURES = {2: figure2, 3: figure3, 4: figure4, 5: figure5, 6: figure6, 7: figure7, 8: figure8, 9: figure9}


def write_svg(t: Table, path: Path, width: int = 480, height: int = 320) -> None:
    """Plain polyline chart of t.ys against t.x; enough to eyeball a trend."""
    pad = 40
    x = t.column(t.x)
    series = [(y, t.column(y)) for y in t.ys]

    def tf(v, log):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log10(v) if log else v

    X = tf(x, t.logx)
    allY = np.concatenate([tf(s, t.logy) for _, s in series]) if series else np.zeros(1)
    finite = np.isfinite(allY)
    ylo, yhi = (allY[finite].min(), allY[finite].max()) if finite.any() else (0.0, 1.0)
    xlo, xhi = np.nanmin(X), np.nanmax(X)
    if yhi == ylo:
        yhi = ylo + 1.0
    if xhi == xlo:
        xhi = xlo + 1.0

    def px(v):
        return pad + (v - xlo) / (xhi - xlo) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - ylo) / (yhi - ylo) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#000000", "#9467bd", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 8}" font-size="11" text-anchor="middle">'
             f'{"log10 " if t.logx else ""}{t.x}</text>']
    for i, (name, y) in enumerate(series):
        Y = tf(y, t.logy)
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(X, Y) if np.isfinite(a) and np.isfinite(b))
        c = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" points="{pts}"/>')
        parts.append(f'<text x="{pad + 5}" y="{pad + 12 * (i + 1)}" font-size="10" fill="{c}">{name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def emit(tables: Sequence[Table], outdir: Path, svg: bool = True) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for t in tables:
        path = outdir / f"{t.name}.csv"
        write_csv(t.header, t.rows, path)
        written.append(path)
        if svg and t.ys:
            sp = outdir / f"{t.name}.svg"
            write_svg(t, sp)
            written.append(sp)
    return written
