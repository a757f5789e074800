import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scalar
from mpc_spectra import condense
from mpc_spectra.errors import NoConstraints, ProblemTooLarge
from mpc_spectra.model import make_problem, with_changes
from oracles import condensed_by_loops, random_spd, random_stable


def stage_cost(p, N, x0, u):
    """Cost summed stage by stage; S pairs u_k with x_{k+1} and is absent on the terminal stage."""
    m = p.m
    x = np.asarray(x0, dtype=float)
    total = 0.0
    for k in range(N):
        uk = u[k * m:(k + 1) * m]
        x = p.A @ x + p.B @ uk
        W = p.P if k == N - 1 else p.Q
        total += x @ W @ x + uk @ p.R @ uk
        if k < N - 1:
            total += 2 * x @ p.S @ uk
    return total


def polarize(p, N):
    """Hessian and x0 coupling of stage_cost read off by polarization (exact for quadratics)."""
    k, n = N * p.m, p.n
    f = lambda x0, u: stage_cost(p, N, x0, u)  # noqa: E731
    H = np.zeros((k, k))
    J = np.zeros((k, n))
    E, X = np.eye(k), np.eye(n)
    z, zx = np.zeros(k), np.zeros(n)
    for i in range(k):
        for j in range(k):
            H[i, j] = 0.5 * (f(zx, E[i] + E[j]) - f(zx, E[i]) - f(zx, E[j]))
        for j in range(n):
            J[i, j] = 0.5 * (f(X[j], E[i]) - f(X[j], z) - f(zx, E[i]))
    return H, J


def test_gamma_scalar_example():
    p = scalar()
    Phi, Gamma = condense.build_prediction(p, 3)
    np.testing.assert_allclose(Gamma, [[1, 0, 0], [0.5, 1, 0], [0.25, 0.5, 1]])
    np.testing.assert_allclose(Phi.ravel(), [0.5, 0.25, 0.125])


def test_horizon_one_hessian():
    # N = 1: H = b^2 p + r = 2
    assert condense.build_primal(scalar(), 1).H[0, 0] == pytest.approx(2.0)
    # with the Lyapunov terminal p = 4/3: 7/3
    assert condense.build_primal(scalar(terminal="lyapunov"), 1).H[0, 0] == pytest.approx(7 / 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(1, 5), st.integers(0, 2**31 - 1), st.booleans())
def test_hessian_matches_stage_sum(n, m, N, seed, cross):
    rng = np.random.default_rng(seed)
    Q, R = random_spd(rng, n, 1.0), random_spd(rng, m, 1.0)
    S = 0.1 * rng.standard_normal((n, m)) if cross else None
    p = make_problem(random_stable(rng, n), rng.standard_normal((n, m)), Q, R, S=S, terminal="lyapunov")
    pr = condense.build_primal(p, N)
    H, J = polarize(p, N)
    np.testing.assert_allclose(pr.H, H, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(pr.J, J, rtol=1e-9, atol=1e-9)
    if not cross:
        np.testing.assert_allclose(pr.H, condensed_by_loops(p.A, p.B, p.Q, p.R, p.P, N), rtol=1e-10, atol=1e-10)


def test_cross_correction_restores_toeplitz(scalar_cross):
    N = 6
    p = with_changes(scalar_cross, terminal="lyapunov")
    Hn = condense.build_primal(p, N).H + condense.cross_correction(p, N)
    for d in range(N):
        diag = np.diag(Hn, -d)
        np.testing.assert_allclose(diag, diag[0], rtol=1e-12)


def test_constraint_rows_and_example():
    p = make_problem(0.5 * np.eye(4), np.ones((4, 2)), np.eye(4), np.eye(2),
                     D=np.vstack([np.eye(4), -np.eye(4)])[:4], cx=np.ones(4),
                     E=np.vstack([np.eye(2), -np.eye(2)])[:2], cu=np.ones(2))
    c = condense.build_constraints(p, 6)
    assert c.G.shape == (36, 12)
    assert c.F.shape == (36, 4) and c.g.shape == (36,)
    s = scalar()
    c1 = condense.build_constraints(s, 2)
    # rows per stage: [x; -x; u; -u]
    np.testing.assert_allclose(c1.G[:4], [[1, 0], [-1, 0], [1, 0], [-1, 0]])
    np.testing.assert_allclose(c1.G[4:], [[0.5, 1], [-0.5, -1], [0, 1], [0, -1]])
    np.testing.assert_allclose(c1.F.ravel(), [-0.5, 0.5, 0, 0, -0.25, 0.25, 0, 0])


def test_no_constraints_raises():
    with pytest.raises(NoConstraints):
        condense.build_constraints(scalar(box=False), 3)


def test_too_large_refused():
    with pytest.raises(ProblemTooLarge):
        condense.build_prediction(scalar(), 20001)


def test_dual_paths_agree(system1):
    a = condense.build_dual(system1, 12)
    b = condense.build_dual(system1, 12, explicit_inverse=True)
    np.testing.assert_allclose(a.H, b.H, atol=1e-10 * np.abs(a.H).max())
    np.testing.assert_allclose(a.J, b.J, atol=1e-10 * np.abs(a.J).max())


def test_dual_nonzero_spectrum(system1):
    N = 5
    Hc = condense.build_primal(system1, N).H
    G = condense.build_constraints(system1, N).G
    Hd = condense.build_dual(system1, N).H
    ev = np.sort(np.linalg.eigvals(np.linalg.solve(Hc, G.T @ G)).real)
    top = condense.dense_spectrum(Hd)[-len(ev):]
    np.testing.assert_allclose(top, ev, rtol=1e-9, atol=1e-12)


def test_recover_primal_stationarity(system1, rng):
    N = 4
    pr = condense.build_primal(system1, N)
    c = condense.build_constraints(system1, N)
    x0, y = rng.standard_normal(system1.n), np.abs(rng.standard_normal(c.G.shape[0]))
    u = condense.recover_primal(pr.H, c.G, pr.J, x0, y)
    np.testing.assert_allclose(pr.H @ u + pr.J @ x0 + c.G.T @ y, 0, atol=1e-9)


def test_rank_threshold():
    assert condense.matrix_rank(np.diag([1.0, 1e-9])) == 1
    assert condense.matrix_rank(np.diag([1.0, 1e-7])) == 2
    assert condense.matrix_rank(np.zeros((2, 2))) == 0
