import numpy as np
import pytest

from conftest import scalar
from mpc_spectra import condense, precond
from mpc_spectra.scaling import scaled_problem


def test_scalar_preconditioner():
    pc = precond.design_block_preconditioner(scalar())
    # M = b^2 p_lyap + r = 7/3
    assert pc.M[0, 0] == pytest.approx(7 / 3)
    assert pc.L[0, 0] == pytest.approx(np.sqrt(7 / 3))
    assert pc.Lbar[0, 0] * pc.L[0, 0] == pytest.approx(1.0)


def test_scalar_preconditioned_symbol_range():
    b = precond.preconditioned_bounds(scalar())
    assert b.lower == pytest.approx(13 / 21, rel=1e-10)
    assert b.upper == pytest.approx(15 / 7, rel=1e-10)
    assert b.condition_limit == pytest.approx(45 / 13, rel=1e-10)


def test_scalar_cross_includes_S_in_M(scalar_cross):
    pc = precond.design_block_preconditioner(scalar_cross)
    assert pc.M[0, 0] == pytest.approx(4 / 3 + 0.6 + 1)
    c = precond.preconditioned_cross_correction(scalar_cross, pc)
    k = 1 / pc.M[0, 0]
    # W for (a, b / sqrt(M)) is (4/3) k
    U = np.array([[k * 0.3, k], [0.09 * 4 / 3 * k, 0.3 * k]])
    np.testing.assert_allclose(c.U, U, rtol=1e-12)


def test_preconditioned_hessian_is_congruence(system1):
    pc = precond.design_block_preconditioner(system1)
    N = 6
    H = condense.build_primal(system1, N).H
    T = np.kron(np.eye(N), pc.Lbar)
    np.testing.assert_allclose(precond.preconditioned_hessian(system1, N, pc), T @ H @ T.T, rtol=1e-12, atol=1e-14)
    # the block is reused across horizons, never recomputed
    assert pc.block(3).shape == (3 * system1.m, 3 * system1.m)


@pytest.mark.parametrize("a1", [1e-4, 1.0, 1e4])
def test_preconditioner_reduces_kappa(system1, a1):
    p = scaled_problem(system1, a1)
    pc = precond.design_block_preconditioner(p)
    b = precond.preconditioned_bounds(p, pc)
    for N in (5, 10, 20, 40):
        H = condense.build_primal(p, N).H
        Hp = precond.preconditioned_hessian(p, N, pc)
        assert precond.condition_number(Hp) <= precond.condition_number(H)
        assert b.contains(condense.dense_spectrum(Hp))


def test_preconditioned_cross_bounds_contain(scalar_cross):
    pc = precond.design_block_preconditioner(scalar_cross)
    b = precond.preconditioned_bounds(scalar_cross, pc)
    assert b.tag == "PrimalCross"
    for N in (2, 10, 40):
        assert b.contains(condense.dense_spectrum(precond.preconditioned_hessian(scalar_cross, N, pc)))
