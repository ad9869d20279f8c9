from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from fermicav.fermion_encoding import Encoding, HermiticityError, encode_hamiltonian
from fermicav.models import (
    HamiltonianFormatError,
    HamiltonianParseError,
    HubbardSpec,
    build_coulomb,
    build_hubbard,
    encode_hubbard,
    format_pauli_hamiltonian,
    load_pauli_hamiltonian,
    parse_pauli_hamiltonian,
    stats,
)
from fermicav.pauli_core import PauliSum, to_matrix


def test_spinless_pair_single_hopping():
    h, _, classes = build_hubbard(HubbardSpec(2, 1, 0.3, 0.0, spinful=False))
    assert [c.label for c in classes] == ["horizontal"]
    enc = encode_hubbard(HubbardSpec(2, 1, 0.3, 0.0, spinful=False)).hamiltonian
    assert {t.word.letters for t in enc.terms} == {"XX", "YY"}


def test_two_by_two_classes():
    _, _, classes = build_hubbard(HubbardSpec(2, 2, 0.1, 1.0))
    c = Counter(tc.label for tc in classes)
    assert c == {"onsite": 4, "horizontal": 4, "vertical_even": 4}


def test_three_by_three_vertical_parity():
    _, _, classes = build_hubbard(HubbardSpec(3, 3, 0.1, 1.0))
    for tc in classes:
        if tc.label.startswith("vertical"):
            assert tc.label == ("vertical_even" if tc.row == 0 else "vertical_odd")


def test_encoded_hubbard_matches_whole_encoding():
    spec = HubbardSpec(2, 2, 0.1, 1.0)
    h, order, _ = build_hubbard(spec)
    whole = encode_hamiltonian(h, Encoding("JW", order))
    lab = encode_hubbard(spec)
    assert np.allclose(to_matrix(lab.hamiltonian), to_matrix(whole))
    assert len(lab.labels) == len(lab.hamiltonian.terms) == len(lab.rows)


def test_hubbard_is_hermitian_and_particle_conserving():
    lab = encode_hubbard(HubbardSpec(2, 2, 0.1, 1.0))
    m = to_matrix(lab.hamiltonian)
    assert np.allclose(m, m.conj().T)


def test_snake_strings_stay_inside_two_rows():
    spec = HubbardSpec(3, 3, 1.0, 1.0)
    lab = encode_hubbard(spec)
    per_row = 2 * spec.Nx
    for t, l, r in zip(lab.hamiltonian.terms, lab.labels, lab.rows):
        if l.startswith("vertical"):
            assert all(r * per_row <= q < (r + 2) * per_row for q in t.word.support)


def test_coulomb_validation():
    with pytest.raises(HermiticityError):
        build_coulomb(2, np.array([[0, 1.0], [2.0, 0]]))
    h = build_coulomb(4, np.zeros((4, 4)), [((0, 1, 2, 3), 0.5), ((3, 2, 1, 0), 0.5)])
    enc = encode_hamiltonian(h, Encoding.jw(4))
    assert enc.is_hermitian() and max(len(t.word.support) for t in enc.terms) <= 4


def test_random_coulomb_hermitian():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    h = encode_hamiltonian(build_coulomb(4, a + a.T), Encoding.jw(4))
    assert h.is_hermitian()


def test_parse_simple_and_duplicates():
    h = parse_pauli_hamiltonian("1.0 0.0 ZZ\n")
    assert [(t.word.letters, t.coeff) for t in h.terms] == [("ZZ", 1.0)]
    h = parse_pauli_hamiltonian("# c\nnqubits 2\n0.5 0 XI\n0.25 0 XI\n1 0 ZZ\n")
    assert [(t.word.letters, t.coeff) for t in h.terms] == [("XI", 0.75), ("ZZ", 1.0)]


def test_parse_errors():
    with pytest.raises(HamiltonianParseError) as e:
        parse_pauli_hamiltonian("1 0 ZZ\nbad line\n")
    assert e.value.line_no == 2
    with pytest.raises(HamiltonianFormatError):
        parse_pauli_hamiltonian("1 0 ZZ\n1 0 ZZZ\n")
    with pytest.raises(HamiltonianFormatError):
        parse_pauli_hamiltonian("# nothing\n")


def test_roundtrip_file(tmp_path):
    h = encode_hubbard(HubbardSpec(2, 1, 0.2, 1.0)).hamiltonian
    p = tmp_path / "h.txt"
    p.write_text(format_pauli_hamiltonian(h))
    back = load_pauli_hamiltonian(p)
    assert np.allclose(to_matrix(back), to_matrix(h))


def test_stats_examples():
    s = stats(PauliSum.from_dict(2, {"ZZ": 1.0}))
    assert (s.n_terms, s.n_groups, s.mean_weight) == (1, 1, 2.0)
    s = stats(PauliSum.from_dict(2, {"XI": 1.0, "IX": 1.0, "ZZ": 1.0}))
    assert s.n_groups == 2
    s = stats(encode_hubbard(HubbardSpec(2, 2, 0.1, 1.0)).hamiltonian)
    assert s.n_groups <= 6
