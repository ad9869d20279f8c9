"""Stitch a Z string across three modules with Bell pairs and check every branch."""

from __future__ import annotations

import numpy as np

from fermicav.backends import compile_teleported_string, term_exponential
from fermicav.circuits import metrics
from fermicav.pauli_core import PauliTerm, PauliWord
from fermicav.simulator import branch_channel, unitary_superoperator


def main() -> None:
    dt = 0.3
    c = compile_teleported_string([[0], [1, 2], [3]], dt)
    target = unitary_superoperator(term_exponential(PauliTerm(1.0, PauliWord("ZZZZ")), dt))
    err = np.abs(branch_channel(c) - target).max()
    m = metrics(c)
    print(f"{c.registers.n_wires} wires, depth {m.depth}, channel error {err:.1e}")
    print(c.dump())


if __name__ == "__main__":
    main()
