"""Fermion-to-qubit encodings (Jordan-Wigner and Bravyi-Kitaev).

Occupancy convention: qubit ``|0>`` is an empty mode and ``|1>`` an occupied
one, so the annihilator acts locally as ``|0><1| = (X + iY)/2``.

Both encodings are handled by one routine. A binary matrix ``beta`` maps the
occupation vector (indexed by linear position under the mode ordering) to
qubit values. Flipping the occupancy of position ``p`` flips the qubits in
column ``p`` of ``beta``. The fermionic sign depends on a parity that
``beta^-1`` expresses as a set of qubits. For Jordan-Wigner ``beta`` is the
identity. For Bravyi-Kitaev it is the Fenwick-tree matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from .pauli_core import ORACLE_CAP, PauliSum, PauliTerm, PauliWord, to_matrix

EncodingKind = Literal["JW", "BK"]


class ModeRangeError(IndexError):
    """Mode index outside the encoding."""


class HermiticityError(ValueError):
    """Hopping matrix is not Hermitian."""


@dataclass(frozen=True)
class ModeOrdering:
    """Bijection from mode index to linear position along the encoding."""

    permutation: tuple[int, ...]

    def __post_init__(self) -> None:
        perm = tuple(int(p) for p in self.permutation)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError("ordering must be a permutation of 0..n-1")
        object.__setattr__(self, "permutation", perm)

    @classmethod
    def identity(cls, n: int) -> "ModeOrdering":
        return cls(tuple(range(n)))

    @property
    def n_modes(self) -> int:
        return len(self.permutation)

    def position(self, mode: int) -> int:
        return self.permutation[mode]

    def inverse(self) -> tuple[int, ...]:
        inv = [0] * self.n_modes
        for m, p in enumerate(self.permutation):
            inv[p] = m
        return tuple(inv)


@dataclass(frozen=True)
class Encoding:
    kind: EncodingKind
    ordering: ModeOrdering

    def __post_init__(self) -> None:
        if self.kind not in ("JW", "BK"):
            raise ValueError(f"unknown encoding {self.kind!r}")

    @classmethod
    def jw(cls, n: int, ordering: ModeOrdering | None = None) -> "Encoding":
        return cls("JW", ordering or ModeOrdering.identity(n))

    @classmethod
    def bk(cls, n: int, ordering: ModeOrdering | None = None) -> "Encoding":
        return cls("BK", ordering or ModeOrdering.identity(n))

    @property
    def n_modes(self) -> int:
        return self.ordering.n_modes


@dataclass(frozen=True)
class FermionOp:
    """Ordered product of ladder operators, ``(mode, dagger)`` left to right."""

    factors: tuple[tuple[int, bool], ...]
    coeff: complex = 1.0


@dataclass(frozen=True)
class FermionHamiltonian:
    """``sum_ij kappa_ij c_i^dag c_j + sum V_ijkl c_i^dag c_j^dag c_k c_l``."""

    n_modes: int
    hopping: np.ndarray
    interaction: tuple[tuple[tuple[int, int, int, int], complex], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        k = np.asarray(self.hopping, dtype=complex)
        if k.shape != (self.n_modes, self.n_modes):
            raise ValueError(f"hopping must be {self.n_modes}x{self.n_modes}")
        if not np.allclose(k, k.conj().T, atol=1e-12, rtol=0):
            raise HermiticityError("hopping matrix is not Hermitian within 1e-12")
        object.__setattr__(self, "hopping", k)
        ints = []
        for idx, v in self.interaction:
            idx = tuple(int(i) for i in idx)
            if len(idx) != 4 or any(not 0 <= i < self.n_modes for i in idx):
                raise ModeRangeError(f"interaction index {idx} out of range")
            v = complex(v)
            if not np.isfinite(v):
                raise ValueError("interaction entries must be finite")
            ints.append((idx, v))
        object.__setattr__(self, "interaction", tuple(ints))


# --------------------------------------------------------------------------
# binary matrices


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    a = np.concatenate([m.astype(np.uint8) % 2, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r, col]), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
        rows = np.nonzero(a[:, col])[0]
        for r in rows:
            if r != col:
                a[r] ^= a[col]
    return a[:, n:]


def fenwick_matrix(n: int) -> np.ndarray:
    """Qubit ``i`` stores the occupancy parity of positions ``(i - lsb(i+1), i]``."""
    beta = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        low = (i + 1) & -(i + 1)
        beta[i, i + 1 - low : i + 1] = 1
    return beta


@dataclass(frozen=True)
class BKSets:
    """Fenwick index sets (over linear positions) for every mode position."""

    update: tuple[frozenset[int], ...]
    parity: tuple[frozenset[int], ...]
    flip: tuple[frozenset[int], ...]

    def remainder(self, j: int) -> frozenset[int]:
        return self.parity[j] - self.flip[j]


@lru_cache(maxsize=None)
def _tables(kind: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    if kind == "JW":
        beta = np.eye(n, dtype=np.uint8)
    else:
        beta = fenwick_matrix(n)
    inv = _gf2_inverse(beta)
    # prefix[p] = qubits whose parity equals sum of occupancies at positions < p
    prefix = np.zeros((n + 1, n), dtype=np.uint8)
    for p in range(n):
        prefix[p + 1] = prefix[p] ^ inv[p]
    beta.setflags(write=False)
    prefix.setflags(write=False)
    return beta, prefix


@lru_cache(maxsize=None)
def bk_sets(n: int) -> BKSets:
    """Update, parity and flip sets of the Bravyi-Kitaev transform (cached)."""
    beta, prefix = _tables("BK", n)
    inv = _gf2_inverse(beta)
    update = tuple(frozenset(int(i) for i in np.nonzero(beta[:, j])[0] if i != j) for j in range(n))
    parity = tuple(frozenset(int(i) for i in np.nonzero(prefix[j])[0]) for j in range(n))
    flip = tuple(frozenset(int(i) for i in np.nonzero(inv[j])[0] if i != j) for j in range(n))
    return BKSets(update, parity, flip)


def _xz_term(xs: np.ndarray, zs: np.ndarray, extra_phase: complex) -> PauliTerm:
    """Operator ``X_xs Z_zs`` (Z acting first) as a phased word."""
    chars = []
    phase = extra_phase
    for x, z in zip(xs, zs):
        if x and z:
            chars.append("Y")
            phase *= -1j  # XZ = -iY
        elif x:
            chars.append("X")
        elif z:
            chars.append("Z")
        else:
            chars.append("I")
    return PauliTerm(phase, PauliWord("".join(chars)))


def _check_mode(j: int, enc: Encoding) -> None:
    if not 0 <= j < enc.n_modes:
        raise ModeRangeError(f"mode {j} outside 0..{enc.n_modes - 1}")


@lru_cache(maxsize=4096)
def _majorana_cached(kind: str, perm: tuple[int, ...], j: int, which: str) -> PauliTerm:
    n = len(perm)
    beta, prefix = _tables(kind, n)
    p = perm[j]
    flips = beta[:, p]
    if which == "q":
        return _xz_term(flips, prefix[p], 1.0)
    # p_j = -i X_flip Z_{parity of positions <= p}
    return _xz_term(flips, prefix[p + 1], -1j)


def encode_majorana(j: int, kind: str, enc: Encoding) -> PauliSum:
    """Majorana ``q_j = c_j + c_j^dag`` or ``p_j = i(c_j - c_j^dag)``."""
    _check_mode(j, enc)
    if kind not in ("q", "p"):
        raise ValueError("Majorana kind must be 'q' or 'p'")
    t = _majorana_cached(enc.kind, enc.ordering.permutation, j, kind)
    return PauliSum(enc.n_modes, (t,))


def encode_mode_op(j: int, dagger: bool, enc: Encoding) -> PauliSum:
    """``c_j`` or ``c_j^dag`` as a sum of exactly two Pauli terms."""
    _check_mode(j, enc)
    q = _majorana_cached(enc.kind, enc.ordering.permutation, j, "q")
    p = _majorana_cached(enc.kind, enc.ordering.permutation, j, "p")
    # c = (q - i p)/2, c^dag = (q + i p)/2
    s = 1j if dagger else -1j
    return PauliSum(enc.n_modes, (PauliTerm(q.coeff / 2, q.word), PauliTerm(s * p.coeff / 2, p.word)))


def encode_fermion_op(op: FermionOp, enc: Encoding) -> PauliSum:
    out = PauliSum(enc.n_modes, (PauliTerm(op.coeff, PauliWord.identity(enc.n_modes)),))
    for mode, dag in op.factors:
        out = out @ encode_mode_op(mode, dag, enc)
    return out


def encode_hamiltonian(h: FermionHamiltonian, enc: Encoding, atol: float = 1e-14) -> PauliSum:
    """Encode the hopping and quartic parts and simplify."""
    if h.n_modes != enc.n_modes:
        raise ModeRangeError("Hamiltonian and encoding disagree on the mode count")
    n = h.n_modes
    cre = [encode_mode_op(j, True, enc) for j in range(n)]
    ann = [encode_mode_op(j, False, enc) for j in range(n)]
    acc: dict[str, complex] = {}

    def add(s: PauliSum, c: complex) -> None:
        for t in s.terms:
            acc[t.word.letters] = acc.get(t.word.letters, 0j) + c * t.coeff

    for i in range(n):
        for j in range(n):
            kij = h.hopping[i, j]
            if kij != 0:
                add(cre[i] @ ann[j], kij)
    for (i, j, k, l), v in h.interaction:
        add(cre[i] @ cre[j] @ ann[k] @ ann[l], v)
    if not acc:
        return PauliSum(n, ())
    return PauliSum.from_dict(n, acc).simplify(atol)


@dataclass(frozen=True)
class CARReport:
    n_modes: int
    kind: str
    max_deviation: float
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_car(enc: Encoding, n_modes: int | None = None, tol: float = 1e-12) -> CARReport:
    """Check canonical anticommutation relations on dense matrices."""
    n = enc.n_modes if n_modes is None else n_modes
    if n != enc.n_modes:
        raise ValueError("n_modes does not match the encoding")
    if n > ORACLE_CAP:
        raise ValueError("CAR check above the dense oracle cap")
    dim = 1 << n
    c = [to_matrix(encode_mode_op(j, False, enc)) for j in range(n)]
    cd = [m.conj().T for m in c]
    eye = np.eye(dim)
    worst = 0.0
    fails = []
    for i in range(n):
        for j in range(n):
            a = c[i] @ cd[j] + cd[j] @ c[i] - (eye if i == j else 0)
            b = c[i] @ c[j] + c[j] @ c[i]
            d = max(np.abs(a).max(), np.abs(b).max())
            worst = max(worst, float(d))
            if d >= tol:
                fails.append(f"({i},{j}) deviation {d:.3e}")
    # the dagger of the encoded annihilator must equal the encoded creator
    for j in range(n):
        d = float(np.abs(to_matrix(encode_mode_op(j, True, enc)) - cd[j]).max())
        worst = max(worst, d)
        if d >= tol:
            fails.append(f"dagger mismatch on mode {j}: {d:.3e}")
    return CARReport(n, enc.kind, worst, tuple(fails))


def number_operator(modes: Sequence[int], enc: Encoding) -> PauliSum:
    acc = PauliSum(enc.n_modes, ())
    for j in modes:
        acc = acc + (encode_mode_op(j, True, enc) @ encode_mode_op(j, False, enc))
    return acc.simplify()
