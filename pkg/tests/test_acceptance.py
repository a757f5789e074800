"""Acceptance criteria 1-13, one test each.

Every test prints a single ``criterion k: PASS|FAIL`` line with the measured
quantities. Run directly (``python3 tests/test_acceptance.py``) for the bare
report without pytest.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import scalar  # noqa: E402
from mpc_spectra import bounds, complexity, condense, precond, scaling  # noqa: E402
from mpc_spectra.fileio import load_problem  # noqa: E402
from mpc_spectra.model import with_changes  # noqa: E402
from mpc_spectra.symbol import (  # noqa: E402
    UnitCircleGrid,
    constraint_symbol,
    h2_norm_squared,
    prediction_symbol,
    primal_symbol,
    symbol_extrema,
)
from oracles import kkt_qp, random_instance  # noqa: E402

ALPHAS = tuple(10.0 ** k for k in range(-4, 5))


def _system1():
    return load_problem("system1.json")


def _system1_cross(p):
    # System 1 carries no cross term; this variant exercises H_cS on the same plant
    S = np.zeros((p.n, p.m))
    S[0, 0], S[1, 1] = 0.5, -0.5
    return with_changes(p, S=S, terminal="lyapunov")


def _report(k: int, ok: bool, detail: str) -> None:
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def _emit(capsys, k, ok, detail):
    if capsys is None:
        _report(k, ok, detail)
    else:
        with capsys.disabled():
            print()
            _report(k, ok, detail)


def criterion_1():
    t0 = time.perf_counter()
    s1 = _system1()
    fixtures = {
        "scalar": (scalar(terminal="q"), scalar(terminal="lyapunov"), scalar(0.3, terminal="lyapunov")),
        "system1": (with_changes(s1, terminal="q"), with_changes(s1, terminal="lyapunov"), _system1_cross(s1)),
    }
    bad = []
    for name, (pq, pp, ps) in fixtures.items():
        bq, bp, bs = bounds.primal_bounds(pq), bounds.primal_bounds(pp), bounds.primal_bounds(ps)
        gb, cb = bounds.prediction_bounds(pp), bounds.constraint_bounds(pp)
        for N in (2, 5, 10, 20, 40, 60):
            _, Gamma = condense.build_prediction(pp, N)
            checks = {
                "H_cQ": bq.contains(condense.dense_spectrum(condense.build_primal(pq, N).H)),
                "H_cP": bp.contains(condense.dense_spectrum(condense.build_primal(pp, N).H)),
                "H_cS": bs.contains(condense.dense_spectrum(condense.build_primal(ps, N).H)),
                "Gamma": gb.contains(condense.dense_singular_values(Gamma)),
                "G": cb.contains(condense.dense_singular_values(condense.build_constraints(pp, N).G)),
            }
            bad += [f"{name}:{op}@N={N}" for op, ok in checks.items() if not ok]
    dt = time.perf_counter() - t0
    return not bad and dt < 30, f"violations={bad or 'none'} runtime={dt:.1f}s"


def criterion_2():
    p = with_changes(_system1(), terminal="q")
    lam = condense.dense_spectrum(condense.build_primal(p, 60).H)[-1]
    up = bounds.primal_bounds(p).upper
    gap = (up - lam) / up
    return 0 <= gap <= 0.01, f"lambda_max(H_cQ(60))={lam:.6f} bound={up:.6f} gap={100 * gap:.4f}%"


def criterion_3():
    s1 = _system1()
    cases = {
        "input": (with_changes(s1, D=None, cx=None), 0.41),
        "state": (with_changes(s1, E=None, cu=None), 1.65),
        "both": (s1, 2.06),
    }
    ok, parts = True, []
    for name, (p, prior) in cases.items():
        db = bounds.dual_bounds(p)
        lam = condense.dense_spectrum(condense.build_dual(p, 30).H)[-1]
        t4, hinf = db.details["thm4"], db.details["hinf"]
        chain = lam <= t4 * (1 + 1e-9) and t4 <= hinf * (1 + 1e-9)
        margin = max(lam, t4, hinf) <= 0.99 * prior
        ok &= chain and margin
        parts.append(f"{name}: {lam:.6f} <= {t4:.6f} <= {hinf:.6f} < 0.99*{prior}")
    return ok, "; ".join(parts)


def criterion_4():
    s1 = _system1()
    fixtures = {"scalar": scalar(), "scalar_cross": scalar(0.3), "system1": s1,
                "system2": load_problem("system2.json")}
    bad = []
    for name, p in fixtures.items():
        for N in (3, 5, 8):
            con = condense.build_constraints(p, N)
            rg = condense.matrix_rank(con.G, 1e-8)
            rh = condense.matrix_rank(condense.build_dual(p, N).H, 1e-8)
            if rg != rh:
                bad.append(f"{name}@N={N}: {rg} vs {rh}")
    return not bad, f"mismatches={bad or 'none'}"


def criterion_5():
    ok, parts = True, []
    for name, p, exact in (("scalar", scalar(), 7 / 3), ("system1", _system1(), None)):
        t = scaling.trace_limits(p)
        if exact is not None:
            ok &= abs(t.a_l - exact) <= 1e-12 * exact
        H = condense.build_primal(p, 300).H
        n = H.shape[0]
        ea = abs(np.trace(H) / n - t.a_l) / t.a_l
        eb = abs(np.sum(H * H) / n - t.b_l) / t.b_l
        ok &= ea <= 5e-3 and eb <= 1e-2
        parts.append(f"{name}: a_l err {100 * ea:.3f}%, b_l err {100 * eb:.3f}%")
    return ok, "; ".join(parts)


def criterion_6():
    p = scalar()
    pred = symbol_extrema(prediction_symbol(p), kind="singular")
    prim = symbol_extrema(primal_symbol(p), kind="eigen")
    t = scaling.trace_limits(p)
    got = {
        "sigma_min": (pred.min, 2 / 3), "sigma_max": (pred.max, 2.0),
        "lambda_min": (prim.min, 13 / 9), "lambda_max": (prim.max, 5.0),
        "kappa": (bounds.primal_bounds(p).condition_limit, 45 / 13),
        "a_l": (t.a_l, 7 / 3), "b_l": (t.b_l, 6.6296296), "kappa_lb": (scaling.condition_lower_bound(t), 1.933139),
    }
    errs = {k: abs(v - r) / abs(r) for k, (v, r) in got.items()}
    ok = all(e <= 1e-6 for e in errs.values())
    return ok, "max rel err " + f"{max(errs.values()):.2e}"


def criterion_7():
    ok, parts = True, []
    s1 = _system1()
    for name, p in (("system1", s1), ("scalar_cross", scalar(0.3, terminal="lyapunov"))):
        base = precond.condition_number(condense.build_primal(p, 20).H)
        for a in (1e-3, 1.0, 1e3):
            q = with_changes(p, Q=a * p.Q, R=a * p.R, S=a * p.S, terminal=a * p.P)
            k = precond.condition_number(condense.build_primal(q, 20).H)
            err = abs(k - base) / base
            ok &= err <= 1e-12
            parts.append(f"{name}@{a:g}: {err:.1e}")
    return ok, "rel diffs " + ", ".join(parts)


def criterion_8():
    p = _system1()
    t = scaling.trace_limits(p)
    worst = np.inf
    for a in ALPHAS:
        q = scaling.scaled_problem(p, a)
        lb = scaling.scaled_condition_lower_bound(t, a, 1.0)
        kap = precond.condition_number(condense.build_primal(q, 40).H)
        worst = min(worst, kap - lb)
    return worst >= 0, f"min(kappa - lower bound) over grid = {worst:.4g}"


def criterion_9():
    p = with_changes(_system1(), D=None, cx=None)
    rows = complexity.scaling_experiment(p, ALPHAS, "fgm", N=20, x0=np.full(4, 0.1), steps=60)
    cfgs = [complexity.fgm_auto_constants(scaling.scaled_problem(p, a), 1e-3) for a in ALPHAS]
    uib = [complexity.fgm_uib(c) for c in cfgs]
    ratio = uib[-1] / uib[0] if uib[0] else np.inf
    improve = max(-r.pdiff_state for r in rows)
    sym = complexity.percent_difference(uib[-1], uib[0])
    ok = 2.3 <= ratio <= 3.5 and 0.0 <= improve <= 10.0
    return ok, (f"UIB {uib[0]} -> {uib[-1]} ratio={ratio:.3g} (symmetric pdiff {sym:.1f}%), "
                f"max state-norm improvement={improve:.2f}%")


def criterion_10():
    p = _system1()
    D, eps_g = 10.0, 1e-4
    uibs = []
    for a in ALPHAS:
        db = bounds.dual_bounds(scaling.scaled_problem(p, a))
        uibs.append(complexity.dgp_uib(complexity.DgpConfig(db.upper, db.details["primal"].upper, D, eps_g)))
    top = uibs[-3:]
    ok = top[0] > top[1] > top[2]
    return ok, f"UIB over alpha1 = {uibs}"


def criterion_11():
    calls = []
    orig = precond.design_block_preconditioner

    def counted(p):
        calls.append(1)
        return orig(p)

    ok, parts = True, []
    for a in (1e-4, 1.0, 1e4):
        p = scaling.scaled_problem(_system1(), a)
        calls.clear()
        pc = counted(p)
        for N in (5, 10, 20, 40):
            raw = precond.condition_number(condense.build_primal(p, N).H)
            pre = precond.condition_number(precond.preconditioned_hessian(p, N, pc))
            ok &= pre <= raw
            parts.append(f"{a:g}/N={N}: {raw:.3g}->{pre:.3g}")
        ok &= len(calls) == 1
    return ok, "; ".join(parts)


def criterion_12():
    worst = 0.0
    for p in (scalar(0.3), _system1(), load_problem("system2.json")):
        vals = []
        for pts in (2048, 4096):
            g = UnitCircleGrid(pts)
            t = scaling.trace_limits(p, g)
            v = [t.I1, t.I2, t.I3, t.I4, t.I5, t.I6, t.h2Q, t.h2QR,
                 h2_norm_squared(p.A, p.B)]
            for s, kind in ((prediction_symbol(p), "singular"), (primal_symbol(p), "eigen"),
                            (constraint_symbol(p), "singular")):
                ex = symbol_extrema(s, g, kind)
                v += [ex.min, ex.max]
            vals.append(np.array(v))
        a, b = vals
        scale = np.maximum(np.abs(b), 1e-300)
        rel = np.where(b == 0, np.abs(a - b), np.abs(a - b) / scale)
        worst = max(worst, float(rel.max()))
    return worst < 1e-9, f"max relative change 2048->4096 = {worst:.2e}"


def criterion_13():
    fgm_err = dgp_err = 0.0
    for seed in range(100):
        p, N, x0, ref = random_instance(seed)
        pr = condense.build_primal(p, N)
        con = condense.build_constraints(p, N)
        d = complexity.solve_dgp(pr.H, pr.J, con.G, con.F, con.g, x0, tol=1e-10, max_iter=10 ** 6)
        dgp_err = max(dgp_err, float(np.max(np.abs(d.u - ref))))
        q = with_changes(p, D=None, cx=None)
        lo, hi = complexity.input_box(q)
        k = N * p.m
        box = np.vstack([np.eye(k), -np.eye(k)])
        ref_box = kkt_qp(pr.H, pr.J @ x0, box, np.concatenate([np.tile(hi, N), -np.tile(lo, N)]))
        f = complexity.solve_fgm(pr.H, pr.J @ x0, np.tile(lo, N), np.tile(hi, N), tol=1e-10, max_iter=10 ** 6)
        fgm_err = max(fgm_err, float(np.max(np.abs(f.x - ref_box))))
    return max(fgm_err, dgp_err) <= 1e-5, f"max |u - u_ref|: FGM {fgm_err:.1e}, DGP {dgp_err:.1e}"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 14)}


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k]()
    _emit(capsys, k, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for k, fn in CRITERIA.items():
        ok, detail = fn()
        _report(k, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
