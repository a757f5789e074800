"""Problem files (JSON) and CSV output."""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import MpcSpectraError, ParseError
from .model import ContinuousModel, Problem, check_schur, validate_problem

BUNDLED = ("system1.json", "system2.json")


def _matrix(obj: Any, field: str) -> np.ndarray:
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"field {field!r}: not a rectangular numeric array") from None
    if M.dtype == object or not np.all(np.isfinite(M)):
        raise ParseError(f"field {field!r}: entries must be finite numbers")
    return M


def problem_from_dict(doc: dict) -> Problem:
    """Build a Problem from the JSON document layout.

    Either A, B, Q, R (and optional S) are given directly, or a ``continuous``
    block {Ac, Bc, Qc, Rc, tau} is discretized with the cost-preserving map.
    """
    from .scaling import discretize_weights

    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    raw: dict[str, Any] = {}
    cont = doc.get("continuous")
    if cont is not None:
        try:
            c = {k: _matrix(cont[k], f"continuous.{k}") for k in ("Ac", "Bc", "Qc", "Rc")}
            tau = float(cont["tau"])
        except KeyError as exc:
            raise ParseError(f"field 'continuous.{exc.args[0]}' is missing") from None
        d = discretize_weights(c["Ac"], c["Bc"], c["Qc"], c["Rc"], tau)
        raw.update(A=d.A, B=d.B, Q=d.Q, R=d.R, S=d.S)
        raw["continuous"] = ContinuousModel(c["Ac"], c["Bc"], c["Qc"], c["Rc"], tau)
    else:
        for key in ("A", "B", "Q", "R"):
            if key not in doc:
                raise ParseError(f"field {key!r} is missing")
            raw[key] = _matrix(doc[key], key)
        if "S" in doc:
            raw["S"] = _matrix(doc["S"], "S")
    term = doc.get("terminal", "q")
    raw["terminal"] = term if isinstance(term, str) else _matrix(term, "terminal")
    cons = doc.get("constraints") or {}
    for key in ("D", "cx", "E", "cu"):
        if key in cons:
            raw[key] = _matrix(cons[key], f"constraints.{key}")
    if ("D" in raw) != ("cx" in raw) or ("E" in raw) != ("cu" in raw):
        raise ParseError("constraints need D with cx and E with cu")
    return validate_problem(raw)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("mpc_spectra") / "data" / name))


def resolve_path(path: str | Path) -> Path:
    """Existing files win; otherwise a bundled fixture with the same file name."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in BUNDLED:
        return bundled_path(p.name)
    raise ParseError(f"no such problem file: {path}")


def load_problem(path: str | Path) -> Problem:
    p = resolve_path(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: line {exc.lineno}: {exc.msg}") from None
    return problem_from_dict(doc)


def problem_to_dict(p: Problem) -> dict:
    doc: dict[str, Any] = {}
    if p.continuous is not None:
        c = p.continuous
        doc["continuous"] = {"Ac": c.Ac.tolist(), "Bc": c.Bc.tolist(), "Qc": c.Qc.tolist(),
                             "Rc": c.Rc.tolist(), "tau": c.tau}
    else:
        doc.update(A=p.A.tolist(), B=p.B.tolist(), Q=p.Q.tolist(), R=p.R.tolist())
        if p.has_cross_term:
            doc["S"] = p.S.tolist()
    pol = p.weights.terminal_policy
    doc["terminal"] = p.P.tolist() if pol == "explicit" else pol
    c = p.constraints
    cons = {}
    if c.j:
        cons.update(D=c.D.tolist(), cx=c.cx.tolist())
    if c.l:
        cons.update(E=c.E.tolist(), cu=c.cu.tolist())
    if cons:
        doc["constraints"] = cons
    return doc


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if not np.isfinite(v) else format(float(v), ".17g")
    return str(v)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    width = len(header)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            if len(r) != width:
                raise MpcSpectraError(f"row has {len(r)} fields, header has {width}")
            w.writerow([_fmt(v) for v in r])


def write_matrix_csv(M: np.ndarray, path: str | Path) -> None:
    M = np.atleast_2d(M)
    write_csv([f"c{i}" for i in range(M.shape[1])], M.tolist(), path)
