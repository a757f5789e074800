"""Iteration bounds for FGM and DGP, reference solvers, and closed-loop scaling experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import condense
from .bounds import dual_bounds, primal_bounds
from .errors import InvalidConfig, MpcSpectraError
from .model import Problem
from .scaling import scaled_problem

CEIL_TOL = 1e-9


def _ceil(x: float) -> int:
    # absorb round-off so that exact integers do not bump up by one
    return int(math.ceil(x - CEIL_TOL * max(1.0, abs(x))))


@dataclass(frozen=True)
class FgmConfig:
    epsilon: float
    Delta: float
    kappa: float
    delta_max: Optional[float] = None
    mu: Optional[float] = None
    norm_B: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidConfig("epsilon must be positive")
        if self.Delta < 0:
            raise InvalidConfig("Delta must be nonnegative")
        if not self.kappa >= 1 - 1e-12:
            raise InvalidConfig(f"kappa must be >= 1, got {self.kappa}")


@dataclass(frozen=True)
class DgpConfig:
    L: float
    L_V: float
    D: float
    eps_g: float
    eps_z: float = 0.0
    eps_xi: float = 0.0
    alpha: float = 2.0
    # recorded for provenance only; it does not enter the bound
    eps_V: Optional[float] = None

    def __post_init__(self):
        if min(self.L, self.L_V, self.D, self.eps_g) <= 0:
            raise InvalidConfig("L, L_V, D and eps_g must be positive")
        if not self.eps_g > 2 * self.D * self.eps_xi:
            raise InvalidConfig("need eps_g > 2 D eps_xi")
        if not self.alpha > 1:
            raise InvalidConfig("alpha must exceed 1")


def fgm_uib(c: FgmConfig) -> int:
    """max{0, min{a, b}} with the linear-rate count a and the sublinear count b."""
    if c.Delta <= c.epsilon:
        return 0
    b = _ceil(2.0 * math.sqrt(c.Delta / c.epsilon) - 2.0)
    rate = 1.0 - math.sqrt(1.0 / c.kappa)
    if rate <= 0.0:
        return max(0, b)
    a = _ceil((math.log(c.epsilon) - math.log(c.Delta)) / math.log(rate))
    return max(0, min(a, b))


def fgm_simplified_uib(kappa: float) -> int:
    if kappa < 1 - 1e-12:
        raise InvalidConfig(f"kappa must be >= 1, got {kappa}")
    return max(0, _ceil(2.0 * math.sqrt(kappa) - 2.0))


def fgm_auto_constants(p: Problem, delta_max: float, norm: str = "spectral") -> FgmConfig:
    """epsilon = (mu/2) delta_max^2 / ||B||^2 and Delta = kappa epsilon.

    ``norm`` picks the matrix norm for B: "spectral" (default) or "fro".
    """
    pb = primal_bounds(p)
    if norm == "spectral":
        nB = float(np.linalg.norm(p.B, 2))
    elif norm == "fro":
        nB = float(np.linalg.norm(p.B, "fro"))
    else:
        raise InvalidConfig(f"unknown norm {norm!r}")
    eps = 0.5 * pb.lower * delta_max ** 2 / nB ** 2
    return FgmConfig(eps, pb.condition_limit * eps, pb.condition_limit, delta_max, pb.lower, nB)


def dgp_uib(c: DgpConfig) -> float:
    """Iteration bound; infinite when no finite Lipschitz constant is available."""
    a = c.alpha
    den = 2 * (c.eps_g - 2 * c.D * c.eps_xi) * a - 2 * (c.eps_g + c.L_V * c.eps_z ** 2)
    if not den > 0:
        raise InvalidConfig(f"nonpositive denominator {den:.3g}; increase alpha or eps_g")
    if not math.isfinite(c.L):
        return float("inf")
    return max(0, _ceil(c.L * c.D ** 2 * a ** 2 / den - 1.0))


@dataclass(frozen=True)
class FgmResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual: float


@dataclass(frozen=True)
class DgpResult:
    u: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool
    residual: float


def solve_fgm(H, q, lower, upper, x0=None, max_iter: int = 10000, tol: float = 1e-8,
              lipschitz: Optional[float] = None, mu: Optional[float] = None) -> FgmResult:
    """Constant-momentum Nesterov method for min 0.5 x'Hx + q'x over a box.

    Stops when the projected-gradient residual ||x - P(x - grad)||_inf <= tol.
    A run that hits ``max_iter`` returns the last iterate with converged=False.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    q = np.asarray(q, dtype=float).reshape(-1)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), q.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), q.shape)
    if np.any(lo > hi):
        raise InvalidConfig("box lower bound exceeds upper bound")
    if lipschitz is None or mu is None:
        ev = np.linalg.eigvalsh(H)
        lipschitz, mu = float(ev[-1]), float(ev[0])
    L = lipschitz
    beta = (math.sqrt(L) - math.sqrt(max(mu, 0.0))) / (math.sqrt(L) + math.sqrt(max(mu, 0.0)))

    def resid(x):
        return float(np.max(np.abs(x - np.clip(x - (H @ x + q), lo, hi)), initial=0.0))

    x = np.clip(np.zeros_like(q) if x0 is None else np.asarray(x0, dtype=float), lo, hi)
    r = resid(x)
    if r <= tol:
        return FgmResult(x, 0, True, r)
    y = x.copy()
    for k in range(1, max_iter + 1):
        xn = np.clip(y - (H @ y + q) / L, lo, hi)
        y = xn + beta * (xn - x)
        x = xn
        r = resid(x)
        if r <= tol:
            return FgmResult(x, k, True, r)
    return FgmResult(x, max_iter, False, r)


def solve_dgp(H, J, G, F, g, x0, y0=None, max_iter: int = 100000, tol: float = 1e-8,
              lipschitz: Optional[float] = None) -> DgpResult:
    """Projected gradient on the dual of min 0.5 u'Hu + x0'J'u s.t. Gu <= F x0 + g.

    Step 1/L with L = lambda_max(G H^-1 G'). The dual gradient is the negated
    constraint slack at the primal minimizer, so the residual is measured as
    ||y - max(0, y - grad)||_inf.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    fac = scipy.linalg.cho_factor(H)
    Hinv_Gt = scipy.linalg.cho_solve(fac, G.T)
    u_free = -scipy.linalg.cho_solve(fac, np.asarray(J, dtype=float) @ x0)
    Hd = G @ Hinv_Gt
    Hd = 0.5 * (Hd + Hd.T)
    h = np.asarray(F, dtype=float) @ x0 + np.asarray(g, dtype=float)
    d = h - G @ u_free  # linear term J_d x0 + g
    L = float(np.linalg.eigvalsh(Hd)[-1]) if lipschitz is None else lipschitz
    if L <= 0:
        L = 1.0

    def resid(y):
        grad = Hd @ y + d
        return float(np.max(np.abs(y - np.maximum(0.0, y - grad)), initial=0.0))

    y = np.zeros(G.shape[0]) if y0 is None else np.maximum(0.0, np.asarray(y0, dtype=float))
    r = resid(y)
    k = 0
    while r > tol and k < max_iter:
        y = np.maximum(0.0, y - (Hd @ y + d) / L)
        k += 1
        r = resid(y)
    u = u_free - Hinv_Gt @ y
    return DgpResult(u, y, k, r <= tol, r)


@dataclass(frozen=True)
class SimulationTrace:
    states: np.ndarray  # (steps + 1, n)
    inputs: np.ndarray  # (steps, m)
    iterations: np.ndarray  # (steps,)
    converged: np.ndarray  # (steps,)
    settle_tol: float = 0.02

    @property
    def state_norm(self) -> float:
        return float(np.linalg.norm(self.states))

    @property
    def input_norm(self) -> float:
        return float(np.linalg.norm(self.inputs))

    @property
    def max_iterations(self) -> int:
        return int(self.iterations.max(initial=0))

    @property
    def settling_time(self) -> int:
        """First step after which ||x||_inf stays within 2% of ||x0||_inf; -1 if never."""
        mags = np.max(np.abs(self.states), axis=1)
        ref = mags[0]
        if ref == 0.0:
            return 0
        outside = np.nonzero(mags > self.settle_tol * ref)[0]
        k = int(outside[-1]) + 1
        return k if k < len(mags) else -1


def input_box(p: Problem) -> tuple[np.ndarray, np.ndarray]:
    """Per-input bounds from E u <= c_u when every row touches a single input."""
    c = p.constraints
    if c.j:
        raise InvalidConfig("the projection solver handles input constraints only")
    lo = np.full(p.m, -np.inf)
    hi = np.full(p.m, np.inf)
    for row, bound in zip(c.E, c.cu):
        nz = np.nonzero(row)[0]
        if nz.size != 1:
            raise InvalidConfig("input constraints are not a box")
        i = nz[0]
        if row[i] > 0:
            hi[i] = min(hi[i], bound / row[i])
        else:
            lo[i] = max(lo[i], bound / row[i])
    if np.any(lo > hi):
        raise InvalidConfig("empty input box")
    return lo, hi


@dataclass
class SolverOptions:
    max_iter: int = 10000
    tol: float = 1e-10
    dgp_max_iter: int = 100000
    dgp_tol: float = 1e-8


def simulate_closed_loop(p: Problem, x0, steps: int, N: int, solver: str = "fgm",
                         options: Optional[SolverOptions] = None) -> SimulationTrace:
    """Receding-horizon regulation from x0, warm-starting each solve from the shifted previous one."""
    opts = options or SolverOptions()
    x = np.asarray(x0, dtype=float).reshape(-1)
    m = p.m
    primal = condense.build_primal(p, N)
    H, J = primal.H, primal.J
    ev = np.linalg.eigvalsh(H)
    if solver == "fgm":
        lo, hi = input_box(p)
        lo, hi = np.tile(lo, N), np.tile(hi, N)
    elif solver == "dgp":
        con = condense.build_constraints(p, N)
        Ld = float(np.linalg.eigvalsh(condense.build_dual(p, N).H)[-1])
    else:
        raise InvalidConfig(f"unknown solver {solver!r}")

    xs, us, its, ok = [x], [], [], []
    warm = np.zeros(N * m)
    ywarm = None
    for k in range(steps):
        try:
            if solver == "fgm":
                res = solve_fgm(H, J @ x, lo, hi, warm, opts.max_iter, opts.tol, ev[-1], ev[0])
                u, it, conv = res.x, res.iterations, res.converged
            else:
                res = solve_dgp(H, J, con.G, con.F, con.g, x, ywarm, opts.dgp_max_iter, opts.dgp_tol, Ld)
                u, it, conv = res.u, res.iterations, res.converged
                ywarm = res.y
        except MpcSpectraError as exc:
            raise type(exc)(f"step {k}: {exc}") from exc
        u0 = u[:m]
        x = p.A @ x + p.B @ u0
        xs.append(x)
        us.append(u0)
        its.append(it)
        ok.append(conv)
        warm = np.concatenate([u[m:], np.zeros(m)])
    return SimulationTrace(np.array(xs), np.array(us).reshape(steps, m), np.array(its, dtype=int),
                           np.array(ok, dtype=bool))


def percent_difference(x: float, ref: float) -> float:
    """Signed symmetric percent difference 100 (x - ref) / ((x + ref) / 2)."""
    mean = 0.5 * (x + ref)
    if mean == 0.0:
        return 0.0
    return 100.0 * (x - ref) / mean


@dataclass(frozen=True)
class ExperimentRow:
    scaling: float
    uib: int
    state_norm: float
    input_norm: float
    iterations: int
    settling: int
    pdiff_input: float = 0.0
    pdiff_state: float = 0.0
    pdiff_iter: float = 0.0
    pdiff_settling: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)


CSV_COLUMNS = ("Scaling", "UIB", "pdiffInput", "pdiffState", "pdiffIter", "pdiffSettling")


def row_to_csv(r: ExperimentRow) -> tuple:
    return (r.scaling, r.uib, r.pdiff_input, r.pdiff_state, r.pdiff_iter, r.pdiff_settling)


def experiment_uib(p: Problem, algorithm: str, udb: Optional[float] = None, eps_g: float = 1e-4,
                   alpha: float = 2.0) -> tuple[int, dict]:
    if algorithm == "fgm":
        pb = primal_bounds(p)
        return fgm_simplified_uib(pb.condition_limit), {"kappa": pb.condition_limit}
    if algorithm == "dgp":
        if udb is None:
            raise InvalidConfig("DGP bound needs an upper dual bound D")
        db = dual_bounds(p)
        cfg = DgpConfig(db.upper, db.details["primal"].upper, udb, eps_g, alpha=alpha)
        return dgp_uib(cfg), {"L": db.upper, "L_V": cfg.L_V}
    raise InvalidConfig(f"unknown algorithm {algorithm!r}")


def scaling_experiment(p: Problem, alphas: Sequence[float], algorithm: str = "fgm", N: int = 20,
                       x0=None, steps: int = 60, udb: Optional[float] = None, eps_g: float = 1e-4,
                       alpha2: float = 1.0, simulate: bool = True,
                       options: Optional[SolverOptions] = None) -> list[ExperimentRow]:
    """Sweep alpha1 (Q scaling); percent differences are against the first grid point."""
    x0 = np.full(p.n, 0.1) if x0 is None else np.asarray(x0, dtype=float)
    rows = []
    for a in alphas:
        ps = scaled_problem(p, a, alpha2)
        uib, extra = experiment_uib(ps, algorithm, udb, eps_g)
        if simulate:
            tr = simulate_closed_loop(ps, x0, steps, N, algorithm, options)
            rows.append(ExperimentRow(a, uib, tr.state_norm, tr.input_norm, tr.max_iterations,
                                      tr.settling_time, extra=extra))
        else:
            rows.append(ExperimentRow(a, uib, float("nan"), float("nan"), 0, 0, extra=extra))
    if not rows:
        return rows
    ref = rows[0]
    out = []
    for r in rows:
        out.append(ExperimentRow(
            r.scaling, r.uib, r.state_norm, r.input_norm, r.iterations, r.settling,
            percent_difference(r.input_norm, ref.input_norm),
            percent_difference(r.state_norm, ref.state_norm),
            percent_difference(r.iterations, ref.iterations),
            percent_difference(r.settling, ref.settling),
            r.extra,
        ))
    return out


def estimate_udb(p: Problem, N: int, samples: int = 50, seed: int = 0, radius: Optional[float] = None,
                 options: Optional[SolverOptions] = None) -> float:
    """Heuristic upper dual bound: max over sampled feasible x0 of max(||y*||_2, 1).

    Sampling can only under-estimate the true bound; use a certified value when one is available.
    """
    opts = options or SolverOptions()
    rng = np.random.default_rng(seed)
    primal = condense.build_primal(p, N)
    con = condense.build_constraints(p, N)
    c = p.constraints
    if radius is None:
        radius = float(np.min(np.abs(c.cx))) if c.j else 1.0
    best = 1.0
    for _ in range(samples):
        x0 = rng.uniform(-radius, radius, p.n)
        res = solve_dgp(primal.H, primal.J, con.G, con.F, con.g, x0, None, opts.dgp_max_iter, opts.dgp_tol)
        if res.converged:
            best = max(best, float(np.linalg.norm(res.y)))
    return best
