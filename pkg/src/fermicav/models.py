"""Benchmark Hamiltonians, Pauli-file ingestion and grouping statistics."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .fermion_encoding import (
    Encoding,
    FermionHamiltonian,
    ModeOrdering,
    encode_hamiltonian,
)
from .pauli_core import PauliSum, PauliTerm, PauliWord, weight

TermLabel = Literal["onsite", "horizontal", "vertical_even", "vertical_odd"]
TERM_LABELS: tuple[str, ...] = ("onsite", "horizontal", "vertical_even", "vertical_odd")


class HamiltonianParseError(ValueError):
    """Malformed line in a Pauli Hamiltonian file."""

    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class HamiltonianFormatError(ValueError):
    """Structurally inconsistent Pauli Hamiltonian file."""


@dataclass(frozen=True)
class HubbardSpec:
    Nx: int
    Ny: int
    kappa: float
    U: float
    spinful: bool = True

    def __post_init__(self) -> None:
        if self.Nx < 1 or self.Ny < 1:
            raise ValueError("lattice extents must be >= 1")

    @property
    def n_sites(self) -> int:
        return self.Nx * self.Ny

    @property
    def n_species(self) -> int:
        return 2 if self.spinful else 1

    @property
    def n_modes(self) -> int:
        return self.n_species * self.n_sites


@dataclass(frozen=True)
class TermClass:
    """Classification of one fermionic Hubbard term.

    ``modes`` holds the two modes of a hopping or the (up, down) pair of an
    onsite term. ``row`` is the lower row of a vertical bond, or the row of a
    horizontal bond or site.
    """

    label: str
    modes: tuple[int, int]
    row: int
    species: int = -1


@dataclass(frozen=True)
class HamiltonianStats:
    n_terms: int
    n_groups: int
    terms_per_group: float
    mean_weight: float
    qubit_participation: float

    def as_dict(self) -> dict:
        return {
            "n_terms": self.n_terms,
            "n_groups": self.n_groups,
            "terms_per_group": self.terms_per_group,
            "mean_weight": self.mean_weight,
            "qubit_participation": self.qubit_participation,
        }


def hubbard_mode(spec: HubbardSpec, x: int, y: int, s: int = 0) -> int:
    """Mode index of site ``(x, y)`` and species ``s`` (row-major sites)."""
    return (y * spec.Nx + x) * spec.n_species + s


def snake_ordering(spec: HubbardSpec) -> ModeOrdering:
    """Row-by-row snake, alternating direction per row.

    Within a row the species occupy consecutive blocks (all up modes, then
    all down modes), each traversed along the snake direction. Same-species
    horizontal neighbours are therefore adjacent in the linear order, and any
    vertical string stays inside the two rows it connects.
    """
    perm = [0] * spec.n_modes
    ns = spec.n_species
    for y in range(spec.Ny):
        for x in range(spec.Nx):
            k = x if y % 2 == 0 else spec.Nx - 1 - x
            for s in range(ns):
                perm[hubbard_mode(spec, x, y, s)] = y * ns * spec.Nx + s * spec.Nx + k
    return ModeOrdering(tuple(perm))


def build_hubbard(spec: HubbardSpec) -> tuple[FermionHamiltonian, ModeOrdering, list[TermClass]]:
    """Fermi-Hubbard Hamiltonian with nearest-neighbour hopping ``-kappa``."""
    n = spec.n_modes
    ns = spec.n_species
    hop = np.zeros((n, n), dtype=complex)
    classes: list[TermClass] = []
    inter = []
    if spec.spinful:
        for y in range(spec.Ny):
            for x in range(spec.Nx):
                up, dn = hubbard_mode(spec, x, y, 0), hubbard_mode(spec, x, y, 1)
                if spec.U != 0:
                    # n_up n_dn = c_up^dag c_dn^dag c_dn c_up
                    inter.append(((up, dn, dn, up), spec.U))
                classes.append(TermClass("onsite", (up, dn), y))
    for s in range(ns):
        for y in range(spec.Ny):
            for x in range(spec.Nx - 1):
                a, b = hubbard_mode(spec, x, y, s), hubbard_mode(spec, x + 1, y, s)
                hop[a, b] = hop[b, a] = -spec.kappa
                classes.append(TermClass("horizontal", (a, b), y, s))
        for y in range(spec.Ny - 1):
            label = "vertical_even" if y % 2 == 0 else "vertical_odd"
            for x in range(spec.Nx):
                a, b = hubbard_mode(spec, x, y, s), hubbard_mode(spec, x, y + 1, s)
                hop[a, b] = hop[b, a] = -spec.kappa
                classes.append(TermClass(label, (a, b), y, s))
    return FermionHamiltonian(n, hop, tuple(inter)), snake_ordering(spec), classes


def _class_hamiltonian(h: FermionHamiltonian, tc: TermClass) -> FermionHamiltonian:
    n = h.n_modes
    hop = np.zeros((n, n), dtype=complex)
    inter = ()
    a, b = tc.modes
    if tc.label == "onsite":
        inter = tuple(e for e in h.interaction if e[0] == (a, b, b, a))
    else:
        hop[a, b] = h.hopping[a, b]
        hop[b, a] = h.hopping[b, a]
    return FermionHamiltonian(n, hop, inter)


@dataclass(frozen=True)
class LabeledPauliSum:
    """Encoded Hubbard Hamiltonian with a class label and row per term."""

    hamiltonian: PauliSum
    labels: tuple[str, ...]
    rows: tuple[int, ...]


def encode_hubbard(spec: HubbardSpec, kind: str = "JW") -> LabeledPauliSum:
    """Encode term by term so that every Pauli term keeps its class label."""
    h, order, classes = build_hubbard(spec)
    enc = Encoding(kind, order)
    acc: dict[str, list] = {}
    for tc in classes:
        part = encode_hamiltonian(_class_hamiltonian(h, tc), enc)
        for t in part.terms:
            if t.word.letters in acc:
                acc[t.word.letters][0] += t.coeff
            else:
                acc[t.word.letters] = [t.coeff, tc.label, tc.row]
    terms, labels, rows = [], [], []
    for w, (c, lab, row) in acc.items():
        if abs(c) > 1e-14:
            terms.append(PauliTerm(c, PauliWord(w)))
            labels.append(lab)
            rows.append(row)
    return LabeledPauliSum(PauliSum(h.n_modes, tuple(terms)), tuple(labels), tuple(rows))


def build_coulomb(
    n_modes: int,
    kappa: np.ndarray,
    V: Sequence[tuple[tuple[int, int, int, int], complex]] = (),
) -> FermionHamiltonian:
    """Generic Coulomb Hamiltonian; raises on a non-Hermitian hopping matrix."""
    return FermionHamiltonian(n_modes, np.asarray(kappa), tuple(V))


_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_DATA_RE = re.compile(rf"^({_FLOAT})\s+({_FLOAT})\s+([IXYZ]+)$")
_NQ_RE = re.compile(r"^nqubits\s+(\d+)$")


def parse_pauli_hamiltonian(text: str) -> PauliSum:
    """Parse the ``<re> <im> <word>`` text format (see ``load_pauli_hamiltonian``)."""
    n_declared: int | None = None
    seen_data = False
    terms: list[PauliTerm] = []
    n: int | None = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _NQ_RE.match(line)
        if m:
            if seen_data or n_declared is not None:
                raise HamiltonianParseError(no, "nqubits must be the first non-comment line")
            n_declared = int(m.group(1))
            if n_declared < 1:
                raise HamiltonianParseError(no, "nqubits must be positive")
            n = n_declared
            continue
        m = _DATA_RE.match(line)
        if not m:
            raise HamiltonianParseError(no, f"expected '<re> <im> <word>', got {raw.strip()!r}")
        seen_data = True
        re_, im_, word = float(m.group(1)), float(m.group(2)), m.group(3)
        if n is None:
            n = len(word)
        elif len(word) != n:
            raise HamiltonianFormatError(
                f"line {no}: word length {len(word)} differs from {n} qubits"
            )
        terms.append(PauliTerm(complex(re_, im_), PauliWord(word)))
    if n is None:
        raise HamiltonianFormatError("file contains no terms and no nqubits line")
    return PauliSum(n, tuple(terms)).simplify()


def load_pauli_hamiltonian(path: str | Path) -> PauliSum:
    """Read a UTF-8 Pauli Hamiltonian file.

    Format: ``#`` starts a comment; each data line is ``<re> <im> <word>``;
    an optional first line ``nqubits <n>``. Duplicate words are merged.
    """
    return parse_pauli_hamiltonian(Path(path).read_text(encoding="utf-8"))


def format_pauli_hamiltonian(h: PauliSum) -> str:
    lines = [f"nqubits {h.n_qubits}"]
    for t in h.terms:
        lines.append(f"{t.coeff.real!r} {t.coeff.imag!r} {t.word.letters}")
    return "\n".join(lines) + "\n"


def stats(h: PauliSum, strategy: str = "greedy_largest_degree_first") -> HamiltonianStats:
    """Grouping statistics: terms, commuting groups, weight and qubit load."""
    from .scheduler import partition_commuting

    n_terms = len(h.terms)
    if n_terms == 0:
        return HamiltonianStats(0, 0, 0.0, 0.0, 0.0)
    groups = partition_commuting(h, strategy)
    mean_w = float(np.mean([weight(t.word) for t in h.terms]))
    # average over qubits of (terms touching the qubit within a group), per group
    touch = np.zeros((len(groups), h.n_qubits))
    for g_i, g in enumerate(groups):
        for idx in g.indices:
            for q in h.terms[idx].word.support:
                touch[g_i, q] += 1
    return HamiltonianStats(
        n_terms=n_terms,
        n_groups=len(groups),
        terms_per_group=n_terms / len(groups),
        mean_weight=mean_w,
        qubit_participation=float(touch.mean()),
    )
