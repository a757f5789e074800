"""Horizon-independent spectral bounds for the condensed operators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import condense
from .errors import ComplexSpectrumResidue, NoConstraints, NotSchurStable, RankMismatch
from .model import Problem, controllability_gramian, eliminate_cross_term
from .symbol import (
    UnitCircleGrid,
    constraint_symbol,
    dual_product_symbol,
    dual_symbol,
    prediction_symbol,
    primal_symbol,
    symbol_extrema,
)

TAGS = ("Prediction", "PrimalQ", "PrimalLyapunov", "PrimalCross", "Constraint", "Dual")
ZERO_TOL = 1e-14
RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class SpectralBound:
    tag: str
    lower: float
    upper: float
    condition_limit: float
    grid_points: int
    method: str = "symbol"
    notes: tuple[str, ...] = ()
    details: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown operator tag {self.tag!r}")
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    def contains(self, values, rel_tol: float = 1e-9) -> bool:
        v = np.asarray(values, dtype=float)
        slack = rel_tol * (self.upper if np.isfinite(self.upper) else np.max(np.abs(v)))
        return bool(np.all(v >= self.lower - slack) and np.all(v <= self.upper + slack))


@dataclass(frozen=True)
class CrossTermCorrection:
    U: np.ndarray
    eta: float
    nu: float


def _kappa(lower: float, upper: float) -> float:
    return upper / lower if lower > ZERO_TOL else float("inf")


def prediction_bounds(p: Problem, grid: Optional[UnitCircleGrid] = None) -> SpectralBound:
    ex = symbol_extrema(prediction_symbol(p), grid, "singular")
    return SpectralBound("Prediction", max(ex.min, 0.0), ex.max, _kappa(ex.min, ex.max), ex.grid_points,
                         details={"extrema": ex})


def cross_term_correction(p: Problem, K: Optional[np.ndarray] = None, B_gram: Optional[np.ndarray] = None
                          ) -> CrossTermCorrection:
    """U = [K B'S, K; S'W_c S, S'B K] and its extreme eigenvalues.

    K = I and B_gram = B give the plain correction; the preconditioned one uses
    K = Lbar' Lbar with the Gramian taken for input matrix B Lbar'.
    """
    m = p.m
    K = np.eye(m) if K is None else K
    Wc = controllability_gramian(p.A, p.B if B_gram is None else B_gram)
    S, B = p.S, p.B
    U = np.block([[K @ B.T @ S, K], [S.T @ Wc @ S, S.T @ B @ K]])
    ev = np.linalg.eigvals(U)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.max(np.abs(ev.imag)) > RESIDUE_TOL * scale:
        raise ComplexSpectrumResidue(f"U has eigenvalues with imaginary part {np.max(np.abs(ev.imag)):.3g}")
    re = ev.real
    return CrossTermCorrection(U, float(re.max()), float(re.min()))


def case3_bounds(p: Problem, grid: Optional[UnitCircleGrid] = None, symbol=None,
                 correction: Optional[CrossTermCorrection] = None) -> SpectralBound:
    """max{0, beta - eta} <= lambda(H_cS) <= gamma - nu."""
    sym = symbol if symbol is not None else primal_symbol(p)
    ex = symbol_extrema(sym, grid, "eigen")
    corr = correction if correction is not None else cross_term_correction(p)
    beta, gamma = ex.min, ex.max
    lower = max(0.0, beta - corr.eta)
    upper = gamma - corr.nu
    notes = ()
    if beta <= corr.eta:
        kappa = float("inf")
        notes = ("beta <= eta: lower bound clamped to 0 although H_cS stays positive definite",)
    else:
        kappa = upper / (beta - corr.eta)
    return SpectralBound("PrimalCross", lower, upper, kappa, ex.grid_points, "symbol", notes,
                         {"beta": beta, "gamma": gamma, "eta": corr.eta, "nu": corr.nu, "extrema": ex})


def primal_bounds(p: Problem, grid: Optional[UnitCircleGrid] = None) -> SpectralBound:
    if p.has_cross_term:
        return case3_bounds(p, grid)
    ex = symbol_extrema(primal_symbol(p), grid, "eigen")
    tag = "PrimalLyapunov" if p.weights.terminal_policy == "lyapunov" else "PrimalQ"
    return SpectralBound(tag, ex.min, ex.max, _kappa(ex.min, ex.max), ex.grid_points, details={"extrema": ex})


def constraint_bounds(p: Problem, grid: Optional[UnitCircleGrid] = None) -> SpectralBound:
    ex = symbol_extrema(constraint_symbol(p), grid, "singular")
    return SpectralBound("Constraint", max(ex.min, 0.0), ex.max, _kappa(ex.min, ex.max), ex.grid_points,
                         details={"extrema": ex})


def dual_bounds(p: Problem, grid: Optional[UnitCircleGrid] = None) -> SpectralBound:
    """Upper bound on lambda_max(H_d); there is no useful lower bound (H_d is singular when G is wide).

    The generic bound sigma_max(P_G)^2 / lambda_min is always computed. The
    symbol bound needs a Toeplitz primal Hessian; with a cross term it is only
    reported when eliminating S keeps the plant Schur-stable, and then it is
    inflated by the rank-2m correction so that it stays a bound.
    """
    if p.constraints.count == 0:
        raise NoConstraints("problem has no state or input constraints")
    pb = primal_bounds(p, grid)
    gb = constraint_bounds(p, grid)
    prop2 = gb.upper ** 2 / pb.lower if pb.lower > ZERO_TOL else float("inf")
    details: dict[str, Any] = {"prop2": prop2, "primal": pb, "constraint": gb}
    notes = ["lower bound is 0: rank(H_d) = rank(G) < dim(H_d) whenever G has more rows than columns"]

    factor = 1.0
    if p.has_cross_term:
        try:
            eliminate_cross_term(p)
        except NotSchurStable:
            factor = 0.0
            notes.append("cross-term elimination loses Schur stability: only the generic bound is reported")
        else:
            # H_cS = H_n - H_e with H_e <= eta I and H_n >= beta I, so H_cS >= (1 - eta/beta) H_n
            beta, eta = pb.details["beta"], pb.details["eta"]
            factor = 1.0 - eta / beta if beta > max(eta, 0.0) else 0.0
            if factor > 0.0:
                notes.append(f"cross term: symbol bound on G H_n^-1 G' divided by 1 - eta/beta = {factor:.6g}")
            else:
                notes.append("cross term with beta <= eta: only the generic bound is reported")

    upper, method, points = prop2, "prop2", gb.grid_points
    if factor > 0.0:
        ex = symbol_extrema(dual_symbol(p, allow_cross=True), grid, "eigen")
        hx = symbol_extrema(dual_product_symbol(p, allow_cross=True), grid, "singular")
        details["thm4"] = ex.max / factor
        details["hinf"] = hx.max / factor
        details["toeplitz_part"] = ex.max
        if ex.max / factor <= upper:
            upper, method, points = ex.max / factor, "thm4", ex.grid_points
    return SpectralBound("Dual", 0.0, upper, float("inf"), points, method, tuple(notes), details)


@dataclass(frozen=True)
class RankReport:
    rank_G: int
    rank_Hd: int
    dimension: int


def dual_rank(p: Problem, N: int, rel_tol: float = 1e-8) -> RankReport:
    con = condense.build_constraints(p, N)
    dual = condense.build_dual(p, N)
    rg = condense.matrix_rank(con.G, rel_tol)
    rh = condense.matrix_rank(dual.H, rel_tol)
    if rg != rh:
        raise RankMismatch(f"rank(G) = {rg} but rank(H_d) = {rh}")
    return RankReport(rg, rh, dual.H.shape[0])


def all_bounds(p: Problem, grid: Optional[UnitCircleGrid] = None) -> list[SpectralBound]:
    out = [prediction_bounds(p, grid), primal_bounds(p, grid)]
    if p.constraints.count:
        out += [constraint_bounds(p, grid), dual_bounds(p, grid)]
    return out
