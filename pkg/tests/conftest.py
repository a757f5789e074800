import numpy as np
import pytest

from mpc_spectra.fileio import load_problem
from mpc_spectra.model import make_problem


def scalar(s=0.0, terminal="q", box=True):
    kw = dict(D=[[1.0], [-1.0]], cx=[1.0, 1.0], E=[[1.0], [-1.0]], cu=[1.0, 1.0]) if box else {}
    return make_problem([[0.5]], [[1.0]], [[1.0]], [[1.0]], S=[[s]], terminal=terminal, **kw)


@pytest.fixture
def scalar_problem():
    return scalar()


@pytest.fixture
def scalar_cross():
    return scalar(0.3)


@pytest.fixture(scope="session")
def system1():
    return load_problem("system1.json")


@pytest.fixture(scope="session")
def system2():
    return load_problem("system2.json")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
