"""Exact finite-horizon condensed matrices: the brute-force oracle for every bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import HessianNotPositiveDefinite, NoConstraints, NonFinite, ProblemTooLarge
from .model import Problem

MAX_ROWS = 20000


@dataclass(frozen=True)
class CondensedPrimal:
    H: np.ndarray
    J: np.ndarray
    N: int


@dataclass(frozen=True)
class CondensedConstraints:
    G: np.ndarray
    F: np.ndarray
    g: np.ndarray
    N: int


@dataclass(frozen=True)
class CondensedDual:
    H: np.ndarray
    J: np.ndarray
    N: int


def _check_horizon(p: Problem, N: int) -> None:
    if N < 1:
        raise ValueError(f"horizon must be >= 1, got {N}")
    rows = N * max(p.m, p.n, p.constraints.count)
    if rows > MAX_ROWS:
        raise ProblemTooLarge(f"condensed matrices would need {rows} rows (limit {MAX_ROWS})")


def _powers(A: np.ndarray, count: int) -> list[np.ndarray]:
    out = [np.eye(A.shape[0])]
    for _ in range(count - 1):
        out.append(A @ out[-1])
    return out


def build_prediction(p: Problem, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Phi (stacked A^1..A^N) and the lower block-triangular Gamma."""
    _check_horizon(p, N)
    n, m = p.n, p.m
    Ak = _powers(p.A, N + 1)
    Phi = np.vstack(Ak[1:])
    blocks = [Ak[i] @ p.B for i in range(N)]
    Gamma = np.zeros((N * n, N * m))
    for i in range(N):
        for k in range(i + 1):
            Gamma[i * n:(i + 1) * n, k * m:(k + 1) * m] = blocks[i - k]
    return Phi, Gamma


def _weight_blocks(p: Problem, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Qbar = scipy.linalg.block_diag(*([p.Q] * (N - 1) + [p.P]))
    Sbar = scipy.linalg.block_diag(*([p.S] * (N - 1) + [np.zeros_like(p.S)]))
    Rbar = np.kron(np.eye(N), p.R)
    return Qbar, Sbar, Rbar


def build_primal(p: Problem, N: int, check_pd: bool = True) -> CondensedPrimal:
    Phi, Gamma = build_prediction(p, N)
    Qbar, Sbar, Rbar = _weight_blocks(p, N)
    # block-diagonal S-bar couples u_k with x_{k+1}; none on the terminal stage
    H = Gamma.T @ Qbar @ Gamma + Sbar.T @ Gamma + Gamma.T @ Sbar + Rbar
    H = 0.5 * (H + H.T)
    J = Gamma.T @ Qbar @ Phi + Sbar.T @ Phi
    if check_pd:
        lam = np.linalg.eigvalsh(H)[0]
        if not lam > 0.0:
            raise HessianNotPositiveDefinite(f"smallest eigenvalue of H_c is {lam:.3g}")
    return CondensedPrimal(H, J, N)


def cross_correction(p: Problem, N: int) -> np.ndarray:
    """H_e = S_c' Gamma + Gamma' S_c, with S only in the last diagonal block.

    Adding it back to H_c gives the nominal matrix whose cross term is
    Toeplitz over the whole horizon.
    """
    _, Gamma = build_prediction(p, N)
    n, m = p.n, p.m
    Sc = np.zeros((N * n, N * m))
    Sc[(N - 1) * n:, (N - 1) * m:] = p.S
    He = Sc.T @ Gamma + Gamma.T @ Sc
    return 0.5 * (He + He.T)


def build_constraints(p: Problem, N: int) -> CondensedConstraints:
    c = p.constraints
    if c.count == 0:
        raise NoConstraints("problem has no state or input constraints")
    Phi, Gamma = build_prediction(p, N)
    n, m, j, l = p.n, p.m, c.j, c.l
    Dbar = np.kron(np.eye(N), np.vstack([c.D, np.zeros((l, n))]))
    Ebar = np.kron(np.eye(N), np.vstack([np.zeros((j, m)), c.E]))
    G = Dbar @ Gamma + Ebar
    F = -Dbar @ Phi
    g = np.tile(np.concatenate([c.cx, c.cu]), N)
    return CondensedConstraints(G, F, g, N)


def build_dual(p: Problem, N: int, explicit_inverse: bool = False) -> CondensedDual:
    """H_d = G H_c^-1 G' and J_d = G H_c^-1 J + F.

    ``explicit_inverse`` forms H_c^-1 outright; it exists only so tests can
    compare it with the factorized path.
    """
    primal = build_primal(p, N)
    con = build_constraints(p, N)
    if explicit_inverse:
        Hinv = np.linalg.inv(primal.H)
        X = Hinv @ con.G.T
        Y = Hinv @ primal.J
    else:
        fac = scipy.linalg.cho_factor(primal.H)
        X = scipy.linalg.cho_solve(fac, con.G.T)
        Y = scipy.linalg.cho_solve(fac, primal.J)
    Hd = con.G @ X
    Hd = 0.5 * (Hd + Hd.T)
    Jd = con.G @ Y + con.F
    return CondensedDual(Hd, Jd, N)


def recover_primal(H: np.ndarray, G: np.ndarray, J: np.ndarray, x0: np.ndarray, y: np.ndarray) -> np.ndarray:
    """u* = -H_c^-1 (G' y* + J x0)."""
    fac = scipy.linalg.cho_factor(H)
    return -scipy.linalg.cho_solve(fac, G.T @ y + J @ x0)


def dense_spectrum(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NonFinite("matrix has non-finite entries")
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def dense_singular_values(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NonFinite("matrix has non-finite entries")
    return np.sort(np.linalg.svd(M, compute_uv=False))


def matrix_rank(M: np.ndarray, rel_tol: float = 1e-8) -> int:
    s = dense_singular_values(M)
    if s.size == 0 or s[-1] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[-1]))
