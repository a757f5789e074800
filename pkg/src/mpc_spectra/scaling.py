"""Trace limits, weight-scaling laws, condition-number lower bounds and weight discretization."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import CrossTermPresent, DegenerateMoments, NonConverged, NonFinite
from .model import Problem, scale_weights, symmetric_sqrt, with_changes
from .symbol import UnitCircleGrid, _herm, _resolvent_times, h2_norm_squared, periodic_integral

MOMENT_TOL = 1e-9


@dataclass(frozen=True)
class ScalingTriple:
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.alpha3) <= 0:
            raise ValueError("scaling factors must be positive")


@dataclass(frozen=True)
class TraceLimits:
    I1: float
    I2: float
    I3: float
    I4: float
    I5: float
    I6: float
    h2Q: float  # ||G_Q||^2 in H2
    h2QR: float  # ||G_QR||^2 in H2
    froR: float  # ||R||_F^2
    froSqrtR: float  # ||sqrt(R)||_F^2 = tr R
    m: int
    has_cross_term: bool = False

    @property
    def a_l(self) -> float:
        return (self.h2Q + 2 * self.I1 + self.froSqrtR) / self.m

    @property
    def b_l(self) -> float:
        return (self.I6 + 4 * self.I5 + 4 * self.I2 + 2 * self.I3 + 2 * self.I4
                + self.froR + 2 * self.h2QR) / self.m

    @property
    def spread(self) -> float:
        """b_l - a_l^2, the variance of the limiting eigenvalue distribution."""
        return self.b_l - self.a_l ** 2


def _integrands(p: Problem):
    A, B, Q, R, S = p.A, p.B, p.Q, p.R, p.S

    def tr(M):
        return np.trace(M, axis1=1, axis2=2)

    def f(k):
        def g(w):
            Pg = _resolvent_times(A, B, w)
            Y = S.T @ Pg
            X = _herm(Pg) @ Q @ Pg
            if k == 1:
                return tr(Y)
            if k == 2:
                return tr(R @ Y)
            if k == 3:
                return tr(Y @ Y)
            if k == 4:
                return tr(Y @ _herm(Y))
            if k == 5:
                return tr(X @ Y)
            return tr(X @ X)
        return g

    return f


def trace_limits(p: Problem, grid: Optional[UnitCircleGrid] = None) -> TraceLimits:
    f = _integrands(p)
    I = {}
    for k in range(1, 7):
        if k <= 5 and not p.has_cross_term:
            I[k] = 0.0
        else:
            I[k] = periodic_integral(f(k), grid)
    sqQ = symmetric_sqrt(p.Q)
    sqR = symmetric_sqrt(p.R)
    return TraceLimits(
        I[1], I[2], I[3], I[4], I[5], I[6],
        h2Q=h2_norm_squared(p.A, p.B, sqQ),
        h2QR=h2_norm_squared(p.A, p.B @ sqR, sqQ),
        froR=float(np.sum(p.R ** 2)),
        froSqrtR=float(np.trace(p.R)),
        m=p.m,
        has_cross_term=p.has_cross_term,
    )


def scale_trace_limits(t: TraceLimits, s: ScalingTriple) -> TraceLimits:
    a1, a2, a3 = s.alpha1, s.alpha2, s.alpha3
    return replace(
        t,
        I1=a3 * t.I1, I2=a2 * a3 * t.I2, I3=a3 ** 2 * t.I3, I4=a3 ** 2 * t.I4,
        I5=a1 * a3 * t.I5, I6=a1 ** 2 * t.I6,
        h2Q=a1 * t.h2Q, h2QR=a1 * a2 * t.h2QR, froR=a2 ** 2 * t.froR, froSqrtR=a2 * t.froSqrtR,
    )


def eigen_divider(t: TraceLimits) -> float:
    """a_l: lambda_min(H_c) <= a_l <= lambda_max(H_c) for every horizon."""
    return t.a_l


def _spread(a: float, b: float) -> float:
    v = b - a * a
    if v < -MOMENT_TOL * max(1.0, abs(b)):
        raise DegenerateMoments(f"b - a^2 = {v:.3g} < 0")
    return max(v, 0.0)


@dataclass(frozen=True)
class FiniteEigenBounds:
    lambda_min_upper: float
    lambda_min_lower: float
    lambda_max_lower: float
    lambda_max_upper: float
    clamped: bool  # lambda_min_lower is negative, hence vacuous for a PD matrix


def finite_n_eigen_bounds(a: float, b: float, n: int) -> FiniteEigenBounds:
    """Trace-moment bounds a - sp <= lambda_min <= a - s/p, a + s/p <= lambda_max <= a + sp."""
    if n < 2:
        raise ValueError("need n >= 2")
    s = np.sqrt(_spread(a, b))
    p = np.sqrt(n - 1)
    lo = a - s * p
    return FiniteEigenBounds(a - s / p, lo, a + s / p, a + s * p, lo < 0)


def condition_lower_bound(t: TraceLimits) -> float:
    """kappa(H_c) >= 1 + 2 sqrt(b_l - a_l^2) / a_l."""
    return 1.0 + 2.0 * np.sqrt(_spread(t.a_l, t.b_l)) / t.a_l


def _require_no_cross(t: TraceLimits) -> None:
    if t.has_cross_term:
        raise CrossTermPresent("this bound assumes S = 0")


def scaled_condition_lower_bound(t: TraceLimits, alpha1: float, alpha2: float) -> float:
    _require_no_cross(t)
    m = t.m
    n1 = m * t.I6 - t.h2Q ** 2
    n2 = m * t.h2QR - t.h2Q * t.froSqrtR
    n3 = m * t.froR - t.froSqrtR ** 2
    v = alpha1 ** 2 * n1 + 2 * alpha1 * alpha2 * n2 + alpha2 ** 2 * n3
    w = alpha1 * t.h2Q + alpha2 * t.froSqrtR
    scale = (alpha1 ** 2 * abs(n1) + 2 * alpha1 * alpha2 * abs(n2) + alpha2 ** 2 * abs(n3)) or 1.0
    if v < -MOMENT_TOL * scale:
        raise DegenerateMoments(f"negative spread {v:.3g}")
    return 1.0 + 2.0 * np.sqrt(max(v, 0.0)) / w


@dataclass(frozen=True)
class AsymptoticBounds:
    q_dominant: float
    r_dominant: float


def asymptotic_condition_bounds(t: TraceLimits) -> AsymptoticBounds:
    _require_no_cross(t)
    m = t.m
    q = 1.0 + 2.0 * np.sqrt(max(m * t.I6 - t.h2Q ** 2, 0.0)) / t.h2Q
    r = 1.0 + 2.0 * np.sqrt(max(m * t.froR - t.froSqrtR ** 2, 0.0)) / t.froSqrtR
    return AsymptoticBounds(q, r)


@dataclass(frozen=True)
class DiscreteWeights:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray


def _cost_integrals(Ac, Bc, Qc, tau):
    n, m = Bc.shape
    Abar = np.zeros((n + m, n + m))
    Abar[:n, :n] = Ac
    Abar[:n, n:] = Bc
    Qbar = np.zeros((n + m, n + m))
    Qbar[:n, :n] = Qc
    C = np.block([[-Abar.T, Qbar], [np.zeros_like(Abar), Abar]])
    F = scipy.linalg.expm(C * tau)
    k = n + m
    F12, F22 = F[:k, k:], F[k:, k:]
    return F22, F22.T @ F12


def _integrand(Ac, Bc, Qc, t):
    n, m = Bc.shape
    Abar = np.zeros((n + m, n + m))
    Abar[:n, :n] = Ac
    Abar[:n, n:] = Bc
    E = scipy.linalg.expm(Abar * t)
    Qbar = np.zeros((n + m, n + m))
    Qbar[:n, :n] = Qc
    return E.T @ Qbar @ E


def discretize_weights(Ac, Bc, Qc, Rc, tau: float, check: bool = True) -> DiscreteWeights:
    """Zero-order-hold plant and the sampled cost that equals the continuous one.

    Uses the block exponential of [[-Abar', Qbar], [0, Abar]] with
    Abar = [[Ac, Bc], [0, 0]], which yields all three weight integrals at once.
    """
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    Bc = np.atleast_2d(np.asarray(Bc, dtype=float))
    Qc = np.atleast_2d(np.asarray(Qc, dtype=float))
    Rc = np.atleast_2d(np.asarray(Rc, dtype=float))
    if tau <= 0:
        raise ValueError("tau must be positive")
    n = Ac.shape[0]
    F22, M = _cost_integrals(Ac, Bc, Qc, tau)
    if not (np.all(np.isfinite(F22)) and np.all(np.isfinite(M))):
        raise NonFinite("matrix exponential overflowed")
    if check:
        h = 1e-4 * tau
        dM = (_cost_integrals(Ac, Bc, Qc, tau + h)[1] - _cost_integrals(Ac, Bc, Qc, tau - h)[1]) / (2 * h)
        want = _integrand(Ac, Bc, Qc, tau)
        if np.linalg.norm(dM - want) > 1e-6 * max(1.0, np.linalg.norm(want)):
            raise NonConverged("weight integrals failed the derivative check")
    M = 0.5 * (M + M.T)
    A = F22[:n, :n]
    B = F22[:n, n:]
    return DiscreteWeights(A, B, M[:n, :n], M[:n, n:], M[n:, n:] + tau * Rc)


def continuous_scaling_map(alpha1, alpha2, tau, Q_d, S_d, R_d, Rc):
    """Discrete weights of the continuous cost with Qc -> a1 Qc, Rc -> a2 Rc."""
    return (alpha1 * Q_d, alpha1 * S_d, alpha1 * R_d + (alpha2 - alpha1) * tau * np.asarray(Rc))


def scaled_problem(p: Problem, alpha1: float, alpha2: float = 1.0, alpha3: Optional[float] = None) -> Problem:
    """Scale the cost of ``p``; discretized problems scale their continuous weights."""
    if p.continuous is None:
        return scale_weights(p, alpha1, alpha2, alpha3)
    c = p.continuous
    Q, S, R = continuous_scaling_map(alpha1, alpha2, c.tau, p.Q, p.S, p.R, c.Rc)
    changes = {"Q": Q, "S": S, "R": R}
    if p.weights.terminal_policy == "explicit":
        changes["terminal"] = alpha1 * p.P
    return with_changes(p, **changes)
