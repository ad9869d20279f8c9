from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermicav.pauli_core import (
    DimensionError,
    PauliSum,
    PauliTerm,
    PauliWord,
    apply_sum,
    apply_word,
    commutes,
    multiply,
    parse_word,
    to_matrix,
    weight,
)

_X = np.array([[0, 1], [1, 0]], complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0 + 0j, -1.0])
_I = np.eye(2, dtype=complex)
_SINGLE = {"I": _I, "X": _X, "Y": _Y, "Z": _Z}


def kron_word(w: str) -> np.ndarray:
    m = np.eye(1, dtype=complex)
    for c in w:
        m = np.kron(m, _SINGLE[c])
    return m


words = st.integers(1, 4).flatmap(lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n)))


@pytest.mark.parametrize(
    "a,b,phase,prod",
    [("X", "Y", 1j, "Z"), ("Y", "X", -1j, "Z"), ("Z", "X", 1j, "Y"), ("XX", "YY", -1, "ZZ"), ("I", "Z", 1, "Z")],
)
def test_multiply_table(a, b, phase, prod):
    ph, w = multiply(PauliWord(a), PauliWord(b))
    assert ph == pytest.approx(phase)
    assert w.letters == prod


@given(words)
@settings(max_examples=60, deadline=None)
def test_multiply_matches_dense(pair):
    a, b = pair
    ph, w = multiply(PauliWord(a), PauliWord(b))
    assert np.allclose(ph * kron_word(w.letters), kron_word(a) @ kron_word(b))


@given(words)
@settings(max_examples=60, deadline=None)
def test_commutes_matches_dense(pair):
    a, b = pair
    ma, mb = kron_word(a), kron_word(b)
    assert commutes(PauliWord(a), PauliWord(b)) == np.allclose(ma @ mb, mb @ ma)


def test_to_matrix_qubit0_most_significant():
    m = to_matrix(PauliWord("ZI"))
    assert np.allclose(np.diag(m), [1, 1, -1, -1])


@pytest.mark.parametrize("w", ["XYZ", "ZZI", "IYI", "XXX"])
def test_apply_word_matches_matrix(w):
    rng = np.random.default_rng(3)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(apply_word(PauliWord(w), psi), kron_word(w) @ psi)


def test_apply_sum_and_product():
    h = PauliSum.from_dict(2, {"XZ": 0.5, "YY": -1.0 + 0.25j})
    psi = np.arange(4, dtype=complex)
    assert np.allclose(apply_sum(h, psi), to_matrix(h) @ psi)
    assert np.allclose(to_matrix(h @ h), to_matrix(h) @ to_matrix(h))


def test_simplify_merges_and_drops():
    h = PauliSum.from_dict(2, {"XI": 1.0, "ZZ": 0.0}) + PauliSum.from_dict(2, {"XI": 2.0})
    s = h.simplify()
    assert [(t.word.letters, t.coeff) for t in s.terms] == [("XI", 3.0)]


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        PauliSum(2, (PauliTerm(1.0, PauliWord("XYZ")),))


def test_invalid_letters_raise():
    with pytest.raises(ValueError):
        PauliWord("XQ")


def test_weight_and_support():
    w = PauliWord.from_sparse(5, {0: "X", 3: "Z"})
    assert w.letters == "XIIZI"
    assert weight(w) == 2 and w.support == (0, 3)


def test_parse_word_roundtrip():
    assert parse_word("XIZ").letters == "XIZ"


def test_hermiticity_flag():
    assert PauliSum.from_dict(1, {"X": 1.0}).is_hermitian()
    assert not PauliSum.from_dict(1, {"X": 1j}).is_hermitian()


def test_commutation_is_symmetric_exhaustive_two_qubits():
    ws = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
    for a in ws:
        for b in ws:
            assert commutes(PauliWord(a), PauliWord(b)) == commutes(PauliWord(b), PauliWord(a))
