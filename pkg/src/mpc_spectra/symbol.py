"""Matrix symbols of the condensed operators and unit-circle numerics.

Every symbol is evaluated in batches: ``s(omegas)`` returns an array of shape
(len(omegas), rows, cols).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.optimize

from .errors import (
    CrossTermNotEliminated,
    MpcSpectraError,
    NoConstraints,
    NonConverged,
    NonFinite,
    SingularResolvent,
    SymbolNotPD,
)
from .model import Problem, check_schur, controllability_gramian

DEFAULT_POINTS = 4096
MAX_POINTS = 2 ** 20
CHUNK = 8192
HERMITIAN_TOL = 1e-10


class NotHermitian(MpcSpectraError):
    pass


def default_points() -> int:
    return int(os.environ.get("MPC_SPECTRA_GRID", DEFAULT_POINTS))


@dataclass(frozen=True)
class UnitCircleGrid:
    points: int = field(default_factory=default_points)

    def __post_init__(self):
        p = int(self.points)
        if p < 64 or p & (p - 1):
            raise ValueError(f"grid size must be a power of two >= 64, got {self.points}")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.points) / self.points

    def doubled(self) -> "UnitCircleGrid":
        return UnitCircleGrid(2 * self.points)


@dataclass(frozen=True)
class MatrixSymbol:
    evaluator: Callable[[np.ndarray], np.ndarray]
    rows: int
    cols: int
    hermitian: bool = False
    name: str = ""

    def __call__(self, omega) -> np.ndarray:
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        if w.size <= CHUNK:
            out = self.evaluator(w)
        else:
            out = np.concatenate([self.evaluator(w[i:i + CHUNK]) for i in range(0, w.size, CHUNK)])
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"symbol {self.name or '?'} is not finite on the grid")
        return out

    def at(self, omega: float) -> np.ndarray:
        return self(np.array([omega]))[0]


@dataclass(frozen=True)
class SpectrumEstimate:
    omegas: np.ndarray
    values: np.ndarray  # (N, k), row i belongs to omegas[i]

    def sorted(self) -> np.ndarray:
        return np.sort(self.values.reshape(-1))


@dataclass(frozen=True)
class Extrema:
    min: float
    max: float
    argmin: float
    argmax: float
    grid_points: int
    converged: bool = True


def _herm(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def _resolvent_times(A: np.ndarray, B: np.ndarray, w: np.ndarray) -> np.ndarray:
    """z (zI - A)^-1 B for each z = exp(j w)."""
    n = A.shape[0]
    z = np.exp(1j * w)
    M = z[:, None, None] * np.eye(n)[None] - A[None]
    rhs = np.broadcast_to(B.astype(complex), (w.size,) + B.shape)
    try:
        X = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        raise SingularResolvent("zI - A is singular on the unit circle") from None
    return z[:, None, None] * X


def transfer_symbol(A: np.ndarray, B: np.ndarray, name: str = "P_Gamma") -> MatrixSymbol:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return MatrixSymbol(lambda w: _resolvent_times(A, B, w), B.shape[0], B.shape[1], False, name)


def prediction_symbol(p: Problem) -> MatrixSymbol:
    """P_Gamma(z) = z (zI - A)^-1 B."""
    return transfer_symbol(p.A, p.B)


def _primal_eval(A, B, Q, R, S, w):
    Pg = _resolvent_times(A, B, w)
    H = _herm(Pg) @ Q @ Pg + R
    if S is not None:
        X = S.T @ Pg
        H = H + X + _herm(X)
    return H


def primal_symbol(p: Problem, include_cross: bool = True) -> MatrixSymbol:
    """P_Gamma* Q P_Gamma + R, plus S' P_Gamma + P_Gamma* S when S is nonzero."""
    S = p.S if (include_cross and p.has_cross_term) else None
    A, B, Q, R = p.A, p.B, p.Q, p.R
    name = "P_Hn" if S is not None else "P_HcQ"
    return MatrixSymbol(lambda w: _primal_eval(A, B, Q, R, S, w), p.m, p.m, True, name)


def constraint_symbol(p: Problem) -> MatrixSymbol:
    """[D P_Gamma; E]."""
    c = p.constraints
    if c.count == 0:
        raise NoConstraints("problem has no state or input constraints")
    A, B, D, E = p.A, p.B, c.D, c.E

    def ev(w):
        parts = []
        if c.j:
            parts.append(D @ _resolvent_times(A, B, w))
        if c.l:
            parts.append(np.broadcast_to(E.astype(complex), (w.size,) + E.shape))
        return np.concatenate(parts, axis=1)

    return MatrixSymbol(ev, c.count, p.m, False, "P_G")


def congruence(s: MatrixSymbol, T: np.ndarray, name: str = "") -> MatrixSymbol:
    """T s(z) T*, used for preconditioning."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    return MatrixSymbol(lambda w: T @ s(w) @ T.T, T.shape[0], T.shape[0], s.hermitian, name or s.name)


def _chol_inv(W: np.ndarray) -> np.ndarray:
    W = 0.5 * (W + _herm(W))
    try:
        L = np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        raise SymbolNotPD("primal symbol is not positive definite on the grid") from None
    eye = np.broadcast_to(np.eye(W.shape[-1], dtype=complex), W.shape)
    return np.linalg.solve(L, eye)


def dual_symbol(p: Problem, allow_cross: bool = False) -> MatrixSymbol:
    """Hermitian form W^-1/2 P_G* P_G W^-1/2 of W^-1 P_G* P_G, W the primal symbol.

    The congruence uses the Cholesky factor of W, which has the same
    eigenvalues as the symmetric square root form.
    """
    if p.has_cross_term and not allow_cross:
        raise CrossTermNotEliminated("dual symbol needs S = 0 (eliminate the cross term first)")
    W_s = primal_symbol(p)
    G_s = constraint_symbol(p)

    def ev(w):
        Li = _chol_inv(W_s(w))
        Pg = G_s(w)
        M = _herm(Pg) @ Pg
        return Li @ M @ _herm(Li)

    return MatrixSymbol(ev, p.m, p.m, True, "P_Hd1")


def dual_product_symbol(p: Problem, allow_cross: bool = False) -> MatrixSymbol:
    """The non-Hermitian product W^-1 P_G* P_G, whose H-infinity norm is reported."""
    if p.has_cross_term and not allow_cross:
        raise CrossTermNotEliminated("dual symbol needs S = 0 (eliminate the cross term first)")
    W_s = primal_symbol(p)
    G_s = constraint_symbol(p)

    def ev(w):
        Pg = G_s(w)
        return np.linalg.solve(W_s(w), _herm(Pg) @ Pg)

    return MatrixSymbol(ev, p.m, p.m, False, "P_Hd1")


def _pointwise(s: MatrixSymbol, w: np.ndarray, kind: str) -> tuple[np.ndarray, np.ndarray]:
    M = s(w)
    if kind == "eigen":
        if not s.hermitian:
            raise NotHermitian(f"eigen extrema need a Hermitian symbol, {s.name} is not")
        scale = np.maximum(np.linalg.norm(M, axis=(1, 2)), 1e-300)
        asym = np.linalg.norm(M - _herm(M), axis=(1, 2))
        if np.any(asym > HERMITIAN_TOL * np.maximum(scale, 1.0)):
            raise NotHermitian(f"symbol {s.name} is not Hermitian on the grid")
        v = np.linalg.eigvalsh(0.5 * (M + _herm(M)))
    elif kind == "singular":
        v = np.linalg.svd(M, compute_uv=False)[:, ::-1]
    else:
        raise ValueError(f"kind must be 'eigen' or 'singular', got {kind!r}")
    return v[:, 0], v[:, -1]


def _refine(s: MatrixSymbol, kind: str, w0: float, h: float, which: str) -> tuple[float, float]:
    sign = 1.0 if which == "min" else -1.0

    def f(w):
        lo, hi = _pointwise(s, np.array([w]), kind)
        return sign * (lo[0] if which == "min" else hi[0])

    res = scipy.optimize.minimize_scalar(f, bounds=(w0 - h, w0 + h), method="bounded",
                                         options={"xatol": 1e-12})
    return sign * float(res.fun), float(res.x) % (2 * np.pi)


def _extrema_once(s: MatrixSymbol, grid: UnitCircleGrid, kind: str) -> Extrema:
    w = grid.angles
    lo, hi = _pointwise(s, w, kind)
    i, k = int(np.argmin(lo)), int(np.argmax(hi))
    h = 2 * np.pi / grid.points
    vmin, wmin = float(lo[i]), float(w[i])
    vmax, wmax = float(hi[k]), float(w[k])
    rmin, rwmin = _refine(s, kind, wmin, h, "min")
    if rmin < vmin:
        vmin, wmin = rmin, rwmin
    rmax, rwmax = _refine(s, kind, wmax, h, "max")
    if rmax > vmax:
        vmax, wmax = rmax, rwmax
    return Extrema(vmin, vmax, wmin, wmax, grid.points)


def symbol_extrema(s: MatrixSymbol, grid: Optional[UnitCircleGrid] = None, kind: str = "eigen") -> Extrema:
    """Extreme eigen/singular values of ``s`` over the unit circle.

    Grid search, then a bounded scalar refinement around the best point, then
    grid doubling until both values move by at most 1e-9 relative. Later levels
    can only widen the interval, so the result is monotone in the grid size.
    """
    grid = grid or UnitCircleGrid()
    cur = _extrema_once(s, grid, kind)
    while True:
        if grid.points >= MAX_POINTS:
            return Extrema(cur.min, cur.max, cur.argmin, cur.argmax, grid.points, False)
        grid = grid.doubled()
        nxt = _extrema_once(s, grid, kind)
        lo, alo = (nxt.min, nxt.argmin) if nxt.min < cur.min else (cur.min, cur.argmin)
        hi, ahi = (nxt.max, nxt.argmax) if nxt.max > cur.max else (cur.max, cur.argmax)
        done = (abs(lo - cur.min) <= 1e-9 * max(1.0, abs(lo))
                and abs(hi - cur.max) <= 1e-9 * max(1.0, abs(hi)))
        cur = Extrema(lo, hi, alo, ahi, grid.points)
        if done:
            return cur


def omega_set(N: int) -> np.ndarray:
    return -np.pi / 2 + 2 * np.pi * np.arange(N) / N


def spectrum_estimate(s: MatrixSymbol, N: int, kind: str = "eigen") -> SpectrumEstimate:
    w = omega_set(N)
    M = s(w)
    if kind == "eigen":
        vals = np.linalg.eigvalsh(0.5 * (M + _herm(M)))
    elif kind == "singular":
        vals = np.sort(np.linalg.svd(M, compute_uv=False), axis=1)
    else:
        raise ValueError(f"kind must be 'eigen' or 'singular', got {kind!r}")
    return SpectrumEstimate(w, vals)


def h2_norm_squared(A: np.ndarray, B: np.ndarray, C: Optional[np.ndarray] = None) -> float:
    """||C (zI - A)^-1 B||_H2^2 = tr(C W_c C')."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    check_schur(A)
    W = controllability_gramian(A, B)
    C = np.eye(A.shape[0]) if C is None else np.atleast_2d(np.asarray(C, dtype=float))
    return float(np.trace(C @ W @ C.T))


def periodic_integral(f: Callable[[np.ndarray], np.ndarray], grid: Optional[UnitCircleGrid] = None,
                      tol: float = 1e-10) -> float:
    """(1/2pi) int_0^2pi f(w) dw by the periodic trapezoid rule with grid doubling."""
    grid = grid or UnitCircleGrid()

    def mean(g):
        v = np.asarray(f(g.angles))
        if not np.all(np.isfinite(v)):
            raise NonFinite("integrand is not finite on the grid")
        return complex(np.mean(v))

    cur = mean(grid)
    while True:
        if grid.points >= MAX_POINTS:
            raise NonConverged(f"quadrature did not settle by {grid.points} points")
        grid = grid.doubled()
        nxt = mean(grid)
        if abs(nxt - cur) <= tol * max(1.0, abs(nxt)):
            break
        cur = nxt
    if abs(nxt.imag) > 1e-9 * max(1.0, abs(nxt.real)):
        raise NonConverged(f"integral has imaginary residue {nxt.imag:.3g}")
    return nxt.real
