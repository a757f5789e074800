"""Regenerate the bundled problem files in src/mpc_spectra/data."""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "mpc_spectra" / "data"


def box(dim, bound):
    return np.vstack([np.eye(dim), -np.eye(dim)]).tolist(), [bound] * (2 * dim)


def system1():
    A = [[0.7, -0.1, 0.0, 0.0], [0.2, -0.5, 0.1, 0.0], [0.0, 0.1, 0.1, 0.0], [0.5, 0.0, 0.5, 0.5]]
    B = [[0.0, 0.1], [0.1, 1.0], [0.1, 0.0], [0.0, 0.0]]
    D, cx = box(4, 0.5)
    E, cu = box(2, 0.5)
    return {"A": A, "B": B, "Q": np.diag([10.0, 20, 30, 40]).tolist(), "R": np.diag([10.0, 20]).tolist(),
            "terminal": "lyapunov", "constraints": {"D": D, "cx": cx, "E": E, "cu": cu}}


def chain(masses=10, mass=1.0, spring=1.0, damper=1.0):
    """Masses in a line, the first tied to a wall; state is [positions; velocities]."""
    Lap = 2 * np.eye(masses) - np.eye(masses, k=1) - np.eye(masses, k=-1)
    Lap[-1, -1] = 1.0  # free end
    Ac = np.block([[np.zeros((masses, masses)), np.eye(masses)],
                   [-spring / mass * Lap, -damper / mass * Lap]])
    Bc = np.vstack([np.zeros((masses, masses)), np.eye(masses) / mass])
    return Ac, Bc


def system2():
    Ac, Bc = chain()
    Qc = np.kron(np.diag([10.0, 20.0]), np.eye(10))
    Rc = np.diag(np.arange(100.0, 1001.0, 100.0))
    D, cx = box(20, 0.2)
    E, cu = box(10, 1.0)
    return {"continuous": {"Ac": Ac.tolist(), "Bc": Bc.tolist(), "Qc": Qc.tolist(), "Rc": Rc.tolist(), "tau": 0.1},
            "terminal": "lyapunov", "constraints": {"D": D, "cx": cx, "E": E, "cu": cu}}


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in (("system1.json", system1()), ("system2.json", system2())):
        (OUT / name).write_text(json.dumps(doc) + "\n")
        print("wrote", OUT / name)
