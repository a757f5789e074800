"""Closed-form block-diagonal preconditioner I_N (x) L^-1 and its spectral analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import condense
from .bounds import CrossTermCorrection, SpectralBound, case3_bounds, cross_term_correction, primal_bounds
from .errors import NotPositiveDefinite
from .model import Problem, solve_discrete_lyapunov
from .symbol import MatrixSymbol, UnitCircleGrid, congruence, primal_symbol, symbol_extrema


@dataclass(frozen=True)
class Preconditioner:
    L: np.ndarray
    Lbar: np.ndarray
    M: np.ndarray

    def block(self, N: int) -> np.ndarray:
        """I_N (x) Lbar, the left factor applied to H_c."""
        return np.kron(np.eye(N), self.Lbar)


def design_block_preconditioner(p: Problem) -> Preconditioner:
    """Cholesky factor of M = B'PB + S'B + B'S + R with P from the Lyapunov equation.

    P is the Lyapunov solution whatever terminal policy ``p`` carries, so M is
    the diagonal block of the Toeplitz part of H_c.
    """
    P = solve_discrete_lyapunov(p.A, p.Q)
    B, S = p.B, p.S
    M = B.T @ P @ B + S.T @ B + B.T @ S + p.R
    M = 0.5 * (M + M.T)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("M is not positive definite") from None
    if np.min(np.diag(L)) <= 1e-12 * np.sqrt(np.linalg.norm(M, 2)):
        raise NotPositiveDefinite("Cholesky factor of M is numerically singular")
    Lbar = scipy.linalg.solve_triangular(L, np.eye(p.m), lower=True)
    return Preconditioner(L, Lbar, M)


def preconditioned_symbol(p: Problem, pc: Preconditioner) -> MatrixSymbol:
    """Lbar P_H Lbar' with P_H the primal symbol (cross term included when present)."""
    return congruence(primal_symbol(p), pc.Lbar, "P_HL")


def preconditioned_cross_correction(p: Problem, pc: Preconditioner) -> CrossTermCorrection:
    """U = [K B'S, K; S'W S, S'B K], K = Lbar'Lbar, W the Gramian of (A, B Lbar')."""
    K = pc.Lbar.T @ pc.Lbar
    return cross_term_correction(p, K=K, B_gram=p.B @ pc.Lbar.T)


def preconditioned_bounds(p: Problem, pc: Optional[Preconditioner] = None,
                          grid: Optional[UnitCircleGrid] = None) -> SpectralBound:
    pc = pc or design_block_preconditioner(p)
    raw = primal_bounds(p, grid)
    sym = preconditioned_symbol(p, pc)
    if p.has_cross_term:
        b = case3_bounds(p, grid, sym, preconditioned_cross_correction(p, pc))
        tag = "PrimalCross"
        lower, upper, kappa, pts, details = b.lower, b.upper, b.condition_limit, b.grid_points, dict(b.details)
    else:
        ex = symbol_extrema(sym, grid, "eigen")
        tag = raw.tag
        lower, upper, pts, details = ex.min, ex.max, ex.grid_points, {"extrema": ex}
        kappa = upper / lower if lower > 1e-14 else float("inf")
    details["raw"] = raw
    details["kappa_reduction"] = raw.condition_limit / kappa if np.isfinite(kappa) else float("nan")
    return SpectralBound(tag, lower, upper, kappa, pts, "symbol", (), details)


def preconditioned_hessian(p: Problem, N: int, pc: Preconditioner) -> np.ndarray:
    T = pc.block(N)
    H = T @ condense.build_primal(p, N).H @ T.T
    return 0.5 * (H + H.T)


def condition_number(H: np.ndarray) -> float:
    ev = condense.dense_spectrum(H)
    return float(ev[-1] / ev[0])
