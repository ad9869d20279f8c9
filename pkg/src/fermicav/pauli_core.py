"""Exact algebra of multi-qubit Pauli operators.

Words are strings over ``IXYZ`` with qubit 0 as the leftmost letter. In the
dense representation qubit 0 is the most significant bit of a basis index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

ORACLE_CAP = 12
_LETTERS = "IXYZ"

# (a, b) -> (phase, product letter) for single-qubit Paulis
_MUL_TABLE: dict[tuple[str, str], tuple[complex, str]] = {}
for _a in _LETTERS:
    _MUL_TABLE[("I", _a)] = (1, _a)
    _MUL_TABLE[(_a, "I")] = (1, _a)
    _MUL_TABLE[(_a, _a)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _MUL_TABLE[(_a, _b)] = (1j, _c)
    _MUL_TABLE[(_b, _a)] = (-1j, _c)


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class OracleSizeError(ValueError):
    """Dense realization requested above the oracle cap."""


@dataclass(frozen=True)
class PauliWord:
    """Tensor product of single-qubit Paulis, without a phase."""

    letters: str

    def __post_init__(self) -> None:
        if not isinstance(self.letters, str):
            raise TypeError("letters must be a string")
        bad = set(self.letters) - set(_LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @classmethod
    def identity(cls, n: int) -> "PauliWord":
        return cls("I" * n)

    @classmethod
    def from_sparse(cls, n: int, ops: dict[int, str]) -> "PauliWord":
        """Build a word from ``{qubit: letter}``."""
        chars = ["I"] * n
        for q, p in ops.items():
            if not 0 <= q < n:
                raise IndexError(f"qubit {q} outside 0..{n - 1}")
            chars[q] = p
        return cls("".join(chars))

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.letters) if p != "I")

    def is_identity(self) -> bool:
        return all(p == "I" for p in self.letters)

    def masks(self) -> tuple[int, int, int]:
        """Return ``(xmask, zmask, n_y)`` over basis-index bits."""
        n = len(self.letters)
        xm = zm = 0
        ny = 0
        for q, p in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if p in "XY":
                xm |= bit
            if p in "ZY":
                zm |= bit
            if p == "Y":
                ny += 1
        return xm, zm, ny

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return self.letters


@dataclass(frozen=True)
class PauliTerm:
    """Complex coefficient times a Pauli word."""

    coeff: complex
    word: PauliWord

    def __post_init__(self) -> None:
        c = complex(self.coeff)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "coeff", c)
        if isinstance(self.word, str):
            object.__setattr__(self, "word", PauliWord(self.word))

    @property
    def n_qubits(self) -> int:
        return self.word.n_qubits

    def __str__(self) -> str:
        return f"({self.coeff.real:+.12g}{self.coeff.imag:+.12g}j) {self.word}"


@dataclass(frozen=True)
class PauliSum:
    """Ordered sum of Pauli terms over a common number of qubits."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        for t in terms:
            if t.n_qubits != self.n_qubits:
                raise DimensionError(
                    f"term {t.word} has {t.n_qubits} qubits, expected {self.n_qubits}"
                )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, terms: Sequence[PauliTerm], n_qubits: int | None = None) -> "PauliSum":
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits required for an empty sum")
            n_qubits = terms[0].n_qubits
        return cls(n_qubits, tuple(terms))

    @classmethod
    def from_dict(cls, n_qubits: int, data: dict[str, complex]) -> "PauliSum":
        return cls(n_qubits, tuple(PauliTerm(c, PauliWord(w)) for w, c in data.items()))

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise DimensionError("cannot add sums over different qubit counts")
        return PauliSum(self.n_qubits, self.terms + other.terms)

    def scale(self, s: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, tuple(PauliTerm(s * t.coeff, t.word) for t in self.terms))

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        """Operator product, simplified."""
        if other.n_qubits != self.n_qubits:
            raise DimensionError("cannot multiply sums over different qubit counts")
        acc: dict[str, complex] = {}
        for a in self.terms:
            for b in other.terms:
                ph, w = multiply(a.word, b.word)
                acc[w.letters] = acc.get(w.letters, 0j) + ph * a.coeff * b.coeff
        return PauliSum.from_dict(self.n_qubits, acc).simplify()

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, tuple(PauliTerm(t.coeff.conjugate(), t.word) for t in self.terms))

    def simplify(self, atol: float = 1e-14) -> "PauliSum":
        """Merge duplicate words (first-occurrence order) and drop zeros."""
        acc: dict[str, complex] = {}
        for t in self.terms:
            acc[t.word.letters] = acc.get(t.word.letters, 0j) + t.coeff
        kept = tuple(
            PauliTerm(c, PauliWord(w)) for w, c in acc.items() if abs(c) > atol
        )
        return PauliSum(self.n_qubits, kept)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        s = self.simplify()
        return all(abs(t.coeff.imag) <= atol for t in s.terms)

    def words(self) -> list[PauliWord]:
        return [t.word for t in self.terms]


def _check_sizes(a: PauliWord, b: PauliWord) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"size mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliWord, b: PauliWord) -> tuple[complex, PauliWord]:
    """Product ``a·b`` as a fourth-root-of-unity phase and a word."""
    _check_sizes(a, b)
    phase: complex = 1
    out = []
    for p, q in zip(a.letters, b.letters):
        ph, r = _MUL_TABLE[(p, q)]
        phase *= ph
        out.append(r)
    # phase is an exact product of units, snap to the four allowed values
    phase = complex(round(phase.real), round(phase.imag))
    return phase, PauliWord("".join(out))


def anticommuting_positions(a: PauliWord, b: PauliWord) -> int:
    _check_sizes(a, b)
    return sum(1 for p, q in zip(a.letters, b.letters) if p != "I" and q != "I" and p != q)


def commutes(a: PauliWord, b: PauliWord) -> bool:
    """True iff the words commute."""
    return anticommuting_positions(a, b) % 2 == 0


def weight(w: PauliWord) -> int:
    """Number of non-identity letters."""
    return sum(1 for p in w.letters if p != "I")


def symplectic(words: Sequence[PauliWord]) -> tuple[np.ndarray, np.ndarray]:
    """Boolean ``(x, z)`` arrays of shape ``(len(words), n)``."""
    if not words:
        return np.zeros((0, 0), bool), np.zeros((0, 0), bool)
    arr = np.array([list(w.letters) for w in words])
    x = (arr == "X") | (arr == "Y")
    z = (arr == "Z") | (arr == "Y")
    return x, z


def commutation_matrix(words: Sequence[PauliWord]) -> np.ndarray:
    """Boolean matrix ``M[i, j] = commutes(words[i], words[j])``."""
    x, z = symplectic(words)
    xi = x.astype(np.int64)
    zi = z.astype(np.int64)
    sym = (xi @ zi.T + zi @ xi.T) % 2
    return sym == 0


def word_action(word: PauliWord) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and phases with ``P|c> = phase[c] |perm[c]>``."""
    n = word.n_qubits
    xm, zm, ny = word.masks()
    idx = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(1 << n, dtype=np.int64)
    v = idx & zm
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    phase = (1j ** ny) * (1 - 2 * parity)
    return idx ^ xm, phase.astype(complex)


def to_matrix(t: PauliWord | PauliTerm | PauliSum, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense complex matrix of a word, term or sum."""
    if isinstance(t, PauliWord):
        t = PauliTerm(1.0, t)
    n = t.n_qubits
    if n > cap:
        raise OracleSizeError(f"{n} qubits exceeds the dense oracle cap of {cap}")
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    terms: Iterable[PauliTerm] = [t] if isinstance(t, PauliTerm) else t.terms
    cols = np.arange(dim)
    for term in terms:
        perm, phase = word_action(term.word)
        m[perm, cols] += term.coeff * phase
    return m


def apply_word(word: PauliWord, psi: np.ndarray) -> np.ndarray:
    """Apply a word to a state vector (or to columns of a matrix)."""
    perm, phase = word_action(word)
    out = np.empty_like(psi, dtype=complex)
    if psi.ndim == 1:
        out[perm] = phase * psi
    else:
        out[perm] = phase[:, None] * psi
    return out


def apply_sum(h: PauliSum, psi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(psi, dtype=complex)
    for t in h.terms:
        out += t.coeff * apply_word(t.word, psi)
    return out


def parse_word(text: str) -> PauliWord:
    return PauliWord(text.strip().upper())
