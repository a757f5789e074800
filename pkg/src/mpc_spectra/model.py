"""CLQR problem data, validation, and the small dense linear algebra everything else uses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NotPositiveSemidefinite,
    NotSchurStable,
    WeightNotPositiveDefinite,
)

SCHUR_TOL = 1e-9
SYMMETRY_TOL = 1e-12
PD_TOL = 1e-12
# Kronecker-vectorized Lyapunov solve is O(n^6); above this size defer to scipy
KRON_MAX_N = 30

TERMINAL_POLICIES = ("q", "lyapunov", "explicit")


@dataclass(frozen=True)
class Plant:
    A: np.ndarray
    B: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class Weights:
    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray
    P: np.ndarray
    terminal_policy: str = "q"

    @property
    def has_cross_term(self) -> bool:
        return bool(np.any(self.S != 0.0))


@dataclass(frozen=True)
class StageConstraints:
    D: np.ndarray
    cx: np.ndarray
    E: np.ndarray
    cu: np.ndarray

    @property
    def j(self) -> int:
        return self.D.shape[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.E.shape[0]

    @property
    def count(self) -> int:
        return self.j + self.l


@dataclass(frozen=True)
class ContinuousModel:
    """Continuous-time origin of a discretized problem (kept for weight scaling)."""

    Ac: np.ndarray
    Bc: np.ndarray
    Qc: np.ndarray
    Rc: np.ndarray
    tau: float


@dataclass(frozen=True)
class Problem:
    plant: Plant
    weights: Weights
    constraints: StageConstraints
    continuous: Optional[ContinuousModel] = field(default=None, compare=False)

    # shorthand accessors used all over the numerics
    @property
    def A(self) -> np.ndarray:
        return self.plant.A

    @property
    def B(self) -> np.ndarray:
        return self.plant.B

    @property
    def Q(self) -> np.ndarray:
        return self.weights.Q

    @property
    def R(self) -> np.ndarray:
        return self.weights.R

    @property
    def S(self) -> np.ndarray:
        return self.weights.S

    @property
    def P(self) -> np.ndarray:
        return self.weights.P

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def m(self) -> int:
        return self.plant.m

    @property
    def has_cross_term(self) -> bool:
        return self.weights.has_cross_term


def _as_matrix(value: Any, name: str, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    M = np.atleast_2d(np.asarray(value, dtype=float))
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    if rows is not None and M.shape[0] != rows:
        raise DimensionMismatch(f"{name} has {M.shape[0]} rows, expected {rows}")
    if cols is not None and M.shape[1] != cols:
        raise DimensionMismatch(f"{name} has {M.shape[1]} columns, expected {cols}")
    return M


def _as_vector(value: Any, name: str, length: int) -> np.ndarray:
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {length}")
    return v


def _symmetric(M: np.ndarray, name: str) -> np.ndarray:
    scale = max(1.0, np.linalg.norm(M))
    if np.linalg.norm(M - M.T) > SYMMETRY_TOL * scale:
        raise WeightNotPositiveDefinite(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


def spectral_radius(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def check_schur(A: np.ndarray, name: str = "A") -> float:
    rho = spectral_radius(A)
    if rho > 1.0 - SCHUR_TOL:
        raise NotSchurStable(f"spectral radius of {name} is {rho:.12g} (must be < 1 - {SCHUR_TOL:g})")
    return rho


def stacked_weight(Q: np.ndarray, R: np.ndarray, S: np.ndarray) -> np.ndarray:
    return np.block([[Q, S], [S.T, R]])


def stacked_weight_margin(Q: np.ndarray, R: np.ndarray, S: np.ndarray) -> float:
    """Smallest eigenvalue of [Q S; S' R] relative to its largest."""
    ev = np.linalg.eigvalsh(stacked_weight(Q, R, S))
    return float(ev[0] / max(abs(ev[-1]), np.finfo(float).tiny))


def solve_discrete_lyapunov(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve A' P A + Q = P for a Schur-stable A.

    Small systems use the vectorized Kronecker system directly; larger ones go
    through scipy's bilinear-transform solver. The residual is checked either way.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    check_schur(A)
    n = A.shape[0]
    if n <= KRON_MAX_N:
        K = np.eye(n * n) - np.kron(A.T, A.T)
        P = np.linalg.solve(K, Q.reshape(-1, order="F")).reshape((n, n), order="F")
    else:
        P = scipy.linalg.solve_discrete_lyapunov(A.T, Q)
    P = 0.5 * (P + P.T)
    resid = np.linalg.norm(A.T @ P @ A + Q - P)
    if resid > 1e-10 * max(1.0, np.linalg.norm(P)):
        # one step of iterative refinement
        dP = scipy.linalg.solve_discrete_lyapunov(A.T, A.T @ P @ A + Q - P)
        P = P + 0.5 * (dP + dP.T)
    return P


def controllability_gramian(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """W with A W A' + B B' = W."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return solve_discrete_lyapunov(A.T, B @ B.T)


def symmetric_sqrt(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    scale = max(np.max(np.abs(w)), 0.0) if w.size else 0.0
    if w.size and w[0] < -tol * scale:
        raise NotPositiveSemidefinite(f"smallest eigenvalue {w[0]:.3g} is negative")
    w = np.clip(w, 0.0, None)
    X = (V * np.sqrt(w)) @ V.T
    return 0.5 * (X + X.T)


def validate_problem(raw: Mapping[str, Any]) -> Problem:
    """Build a validated Problem from a mapping of raw arrays.

    Recognised keys: A, B, Q, R, S (optional), terminal ("q", "lyapunov" or a
    matrix), D, cx, E, cu (all optional), continuous (a ContinuousModel).
    """
    try:
        A_raw, B_raw = raw["A"], raw["B"]
        Q_raw, R_raw = raw["Q"], raw["R"]
    except KeyError as exc:
        raise DimensionMismatch(f"missing required matrix {exc.args[0]}") from None

    A = _as_matrix(A_raw, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    B_arr = np.asarray(B_raw, dtype=float)
    if B_arr.ndim == 1 and B_arr.size == n:
        B_arr = B_arr.reshape(n, 1)
    B = _as_matrix(B_arr, "B", rows=n)
    m = B.shape[1]

    Q = _symmetric(_as_matrix(Q_raw, "Q", n, n), "Q")
    R = _symmetric(_as_matrix(R_raw, "R", m, m), "R")
    S_raw = raw.get("S")
    S = np.zeros((n, m)) if S_raw is None else _as_matrix(S_raw, "S", n, m)

    if stacked_weight_margin(Q, R, S) <= PD_TOL:
        raise WeightNotPositiveDefinite("stacked weight [Q S; S' R] is not positive definite")
    check_schur(A)

    terminal = raw.get("terminal", "q")
    if isinstance(terminal, str):
        policy = terminal.lower()
        if policy in ("q", "equalsq", "equals_q"):
            policy, P = "q", Q.copy()
        elif policy == "lyapunov":
            P = solve_discrete_lyapunov(A, Q)
        else:
            raise DimensionMismatch(f"unknown terminal policy {terminal!r}")
    else:
        policy = "explicit"
        P = _symmetric(_as_matrix(terminal, "P", n, n), "P")

    D = raw.get("D")
    E = raw.get("E")
    D = np.zeros((0, n)) if D is None else _as_matrix(D, "D", cols=n)
    E = np.zeros((0, m)) if E is None else _as_matrix(E, "E", cols=m)
    if D.size == 0:
        D = np.zeros((0, n))
    if E.size == 0:
        E = np.zeros((0, m))
    cx = raw.get("cx")
    cu = raw.get("cu")
    cx = _as_vector(np.zeros(0) if cx is None else cx, "cx", D.shape[0])
    cu = _as_vector(np.zeros(0) if cu is None else cu, "cu", E.shape[0])

    return Problem(
        plant=Plant(A, B),
        weights=Weights(Q, R, S, P, policy),
        constraints=StageConstraints(D, cx, E, cu),
        continuous=raw.get("continuous"),
    )


def make_problem(A, B, Q, R, S=None, terminal="q", D=None, cx=None, E=None, cu=None, continuous=None) -> Problem:
    raw: dict[str, Any] = {"A": A, "B": B, "Q": Q, "R": R, "S": S, "terminal": terminal}
    if D is not None:
        raw["D"], raw["cx"] = D, cx
    if E is not None:
        raw["E"], raw["cu"] = E, cu
    if continuous is not None:
        raw["continuous"] = continuous
    return validate_problem(raw)


def problem_to_raw(p: Problem) -> dict[str, Any]:
    """Inverse of validate_problem, preserving the terminal policy."""
    terminal: Any = p.weights.terminal_policy
    if terminal == "explicit":
        terminal = p.P
    return {
        "A": p.A, "B": p.B, "Q": p.Q, "R": p.R, "S": p.S, "terminal": terminal,
        "D": p.constraints.D, "cx": p.constraints.cx,
        "E": p.constraints.E, "cu": p.constraints.cu,
        "continuous": p.continuous,
    }


def with_changes(p: Problem, **changes: Any) -> Problem:
    """Re-validate a copy of ``p`` with some raw fields replaced."""
    raw = problem_to_raw(p)
    raw.update(changes)
    return validate_problem(raw)


def scale_weights(p: Problem, alpha1: float, alpha2: float = 1.0, alpha3: Optional[float] = None) -> Problem:
    """Problem with Q -> a1 Q, R -> a2 R, S -> a3 S (P follows its policy).

    ``alpha3`` defaults to sqrt(a1 a2), the congruence scaling that keeps the
    stacked weight positive definite.
    """
    if alpha3 is None:
        alpha3 = float(np.sqrt(alpha1 * alpha2))
    changes: dict[str, Any] = {"Q": alpha1 * p.Q, "R": alpha2 * p.R, "S": alpha3 * p.S}
    if p.weights.terminal_policy == "explicit":
        changes["terminal"] = alpha1 * p.P
    return with_changes(p, **changes)


def eliminate_cross_term(p: Problem) -> Problem:
    """Remove S via u = v - R^-1 S' x; the new A may lose Schur stability."""
    if not p.has_cross_term:
        return p
    K = np.linalg.solve(p.R, p.S.T)
    A_t = p.A - p.B @ K
    check_schur(A_t, "A - B R^-1 S'")
    Q_t = p.Q - p.S @ K
    Q_t = 0.5 * (Q_t + Q_t.T)
    return with_changes(p, A=A_t, Q=Q_t, S=np.zeros_like(p.S), continuous=None)


__all__ = [
    "Plant", "Weights", "StageConstraints", "ContinuousModel", "Problem",
    "validate_problem", "make_problem", "with_changes", "scale_weights",
    "solve_discrete_lyapunov", "controllability_gramian", "symmetric_sqrt",
    "eliminate_cross_term", "spectral_radius", "check_schur", "stacked_weight_margin",
]
