from __future__ import annotations

import numpy as np
import pytest

from fermicav.fermion_encoding import Encoding, number_operator
from fermicav.models import TERM_LABELS, HubbardSpec, build_hubbard, encode_hubbard
from fermicav.scheduler import partition_by_labels
from fermicav.simulator import sector_ground_state


def dense_expm_herm(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def phase_free_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry distance after removing the best global phase."""
    ov = np.vdot(b.ravel(), a.ravel())
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.abs(a - ph * b).max())


class Hubbard22:
    def __init__(self) -> None:
        self.spec = HubbardSpec(2, 2, 0.1, 1.0)
        self.lab = encode_hubbard(self.spec)
        self.h = self.lab.hamiltonian
        _, order, _ = build_hubbard(self.spec)
        self.enc = Encoding("JW", order)
        self.e_g, self.psi = sector_ground_state(self.h, number_operator(range(8), self.enc), 4)
        self.groups = tuple(partition_by_labels(self.h, self.lab.labels, TERM_LABELS))


@pytest.fixture(scope="session")
def hubbard22() -> Hubbard22:
    return Hubbard22()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter) -> None:
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
