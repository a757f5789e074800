import json

import numpy as np
import pytest

from conftest import scalar
from mpc_spectra.errors import MpcSpectraError, NotSchurStable, ParseError
from mpc_spectra.fileio import load_problem, problem_from_dict, problem_to_dict, resolve_path, write_csv


def test_bundled_fixtures_resolve(tmp_path):
    assert resolve_path("system1.json").exists()
    assert resolve_path(tmp_path / "system2.json").name == "system2.json"
    with pytest.raises(ParseError):
        resolve_path(tmp_path / "nope.json")


def test_system2_layout(system2):
    assert (system2.n, system2.m) == (20, 10)
    assert system2.has_cross_term and system2.continuous is not None
    assert system2.constraints.j == 40 and system2.constraints.l == 20


def test_round_trip(tmp_path):
    p = scalar(0.3, terminal="lyapunov")
    path = tmp_path / "p.json"
    path.write_text(json.dumps(problem_to_dict(p)))
    q = load_problem(path)
    for name in ("A", "B", "Q", "R", "S", "P"):
        np.testing.assert_array_equal(getattr(q, name), getattr(p, name))
    assert q.constraints.count == p.constraints.count


def test_continuous_round_trip(system2):
    q = problem_from_dict(problem_to_dict(system2))
    np.testing.assert_allclose(q.A, system2.A)
    np.testing.assert_allclose(q.S, system2.S)


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "A": [[0.5]],\n  "B": [[1.0]]\n  "Q": [[1]]\n}\n')
    with pytest.raises(ParseError, match="line 4"):
        load_problem(path)


@pytest.mark.parametrize("doc,match", [
    ({"A": [[0.5]], "B": [[1.0]], "Q": [[1.0]]}, "'R' is missing"),
    ({"A": [[0.5]], "B": [[1.0]], "Q": [[1.0]], "R": [["x"]]}, "R"),
    ({"A": [[0.5]], "B": [[1.0]], "Q": [[1.0]], "R": [[1.0]], "constraints": {"D": [[1.0]]}}, "cx"),
    ([1, 2], "object"),
])
def test_malformed_documents(doc, match):
    with pytest.raises(ParseError, match=match):
        problem_from_dict(doc)


def test_domain_errors_pass_through():
    with pytest.raises(NotSchurStable):
        problem_from_dict({"A": [[1.5]], "B": [[1.0]], "Q": [[1.0]], "R": [[1.0]]})


def test_write_csv_format(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(["a", "b", "c"], [[1, 0.1, float("inf")], [True, 1 / 3, "x"]], path)
    lines = path.read_text().splitlines()
    assert lines == ["a,b,c", "1,0.10000000000000001,inf", "true,0.33333333333333331,x"]
    with pytest.raises(MpcSpectraError):
        write_csv(["a"], [[1, 2]], path)
