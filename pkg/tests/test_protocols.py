from __future__ import annotations

import math

import numpy as np
import pytest

from fermicav.backends import Backend
from fermicav.fermion_encoding import Encoding, FermionHamiltonian, encode_hamiltonian, number_operator
from fermicav.models import HubbardSpec, encode_hubbard
from fermicav.pauli_core import PauliSum, PauliWord
from fermicav.protocols import (
    CorrelatorResult,
    amplitude_at,
    diagonal_part,
    dynamical_correlator,
    expectation_by_hadamard,
    find_peaks,
    fourier_spectrum,
    hadamard_test,
    ipea,
    kitaev_pea,
    spectral_function,
    static_correlator,
)
from fermicav.simulator import exact_diagonalize, sector_ground_state

Z1 = PauliSum.from_dict(1, {"Z": 1.0})
KINDS = ["local", "cavity_series", "cavity_parallel"]


def test_pea_single_term_cosine_exact():
    r = kitaev_pea(Z1, np.array([1, 0]), 0.05, 200)
    assert np.abs(r.re_za - np.cos(2 * r.times)).max() < 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_pea_single_term_compiled(kind):
    r = kitaev_pea(Z1, np.array([1, 0]), 0.1, 30, backend=Backend(kind))
    assert np.abs(r.re_za - np.cos(2 * r.times)).max() < 1e-10
    assert np.abs(r.im_za - np.sin(2 * r.times)).max() < 1e-10


def test_pea_mixed_state_two_equal_peaks():
    r = kitaev_pea(Z1, np.array([1, 1]) / math.sqrt(2), 0.05, 400)
    pk = sorted(r.peaks, key=lambda p: p.omega)
    assert len(pk) == 2
    assert pk[0].omega == pytest.approx(-2.0, abs=r.spectrum.bin_width / 4)
    assert pk[1].omega == pytest.approx(2.0, abs=r.spectrum.bin_width / 4)
    assert pk[0].fraction == pytest.approx(0.5, abs=0.01)


def test_pea_weights_follow_overlaps():
    psi = np.array([math.sqrt(0.8), math.sqrt(0.2)])
    r = kitaev_pea(Z1, psi, 0.05, 400)
    pk = sorted(r.peaks, key=lambda p: p.omega)
    # |0> has E=+1 -> omega=+2
    assert pk[1].fraction == pytest.approx(0.8, abs=0.01)


def test_pea_hubbard_ground_state(hubbard22):
    r = kitaev_pea(hubbard22.h, hubbard22.psi, 0.5, 200)
    assert r.spectrum.dominant().omega == pytest.approx(2 * hubbard22.e_g, abs=r.spectrum.bin_width / 2)


def test_pea_subtract_diagonal_restores_energy(hubbard22):
    r = kitaev_pea(hubbard22.h, hubbard22.psi, 0.5, 200, subtract_diagonal=True)
    assert r.energies()[0] == pytest.approx(hubbard22.e_g, abs=r.spectrum.bin_width / 4)


def test_diagonal_part_only_z():
    h = PauliSum.from_dict(2, {"ZI": 1, "XX": 2, "II": 3, "ZZ": 4})
    assert {t.word.letters for t in diagonal_part(h)} == {"ZI", "II", "ZZ"}


def test_fourier_unit_tone():
    t = 0.1 * np.arange(256)
    om, mag, bw = fourier_spectrum(t, np.exp(1.3j * t))
    pk = find_peaks(om, mag)
    assert len(pk) == 1 and pk[0].omega == pytest.approx(1.3, abs=bw / 10)
    assert amplitude_at(t, np.exp(1.3j * t), 1.3) == pytest.approx(1.0)


def test_fourier_rejects_nonuniform_grid():
    with pytest.raises(ValueError):
        fourier_spectrum(np.array([0, 1, 3.0]), np.ones(3))


@pytest.mark.parametrize("bits", [(1, 0, 1), (0, 0, 0), (1, 1, 0, 1)])
def test_ipea_exact_phase(bits):
    phi = sum(b / 2 ** (k + 1) for k, b in enumerate(bits))
    # exp(-i E t0) = exp(2 pi i phi) with E = -2 pi phi / t0 on |1> of h = E n
    t0 = 1.0
    e = -2 * math.pi * phi / t0
    h = PauliSum.from_dict(1, {"I": e / 2, "Z": -e / 2})
    r = ipea(h, np.array([0, 1]), len(bits), t0)
    assert r.bits == bits and r.phase == pytest.approx(phi)
    assert all(p == pytest.approx(1.0) for p in r.probabilities)


def test_ipea_hubbard_1x2_eight_bits():
    h = encode_hubbard(HubbardSpec(1, 2, 1.0, 2.0)).hamiltonian
    w, v = exact_diagonalize(h)
    t0 = 0.3
    k = 3
    true = (-w[k] * t0 / (2 * math.pi)) % 1.0
    r = ipea(h, v[:, k], 8, t0)
    d = abs(r.phase - true)
    assert min(d, 1 - d) <= 2**-8


def test_ipea_compiled_backend_close():
    h = PauliSum.from_dict(2, {"ZZ": 0.4, "ZI": 0.3})
    w, v = exact_diagonalize(h)
    t0 = 1.0
    true = (-w[0] * t0 / (2 * math.pi)) % 1.0
    r = ipea(h, v[:, 0], 6, t0, backend=Backend("cavity_series"), dt=0.25)
    d = abs(r.phase - true)
    assert min(d, 1 - d) <= 2**-6


def test_ipea_bad_L():
    with pytest.raises(ValueError):
        ipea(Z1, np.array([1, 0]), 0, 1.0)


def test_hadamard_test_examples():
    assert hadamard_test(np.array([1, 0, 0, 0]), PauliWord("XX")) == pytest.approx(0.0, abs=1e-12)
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert hadamard_test(bell, PauliWord("XX")) == pytest.approx(1.0)


def test_hadamard_imaginary_part():
    # <0|(X + iY)... on |+i>: <Y> = 1 so the imaginary channel of <iY>-free Y reads 0, real reads 1
    s = np.array([1, 1j]) / math.sqrt(2)
    assert hadamard_test(s, PauliWord("Y")) == pytest.approx(1.0)
    assert hadamard_test(s, PauliWord("Y"), math.pi / 2) == pytest.approx(0.0, abs=1e-12)


def test_expectation_by_hadamard_non_hermitian():
    op = PauliSum.from_dict(1, {"X": 0.5, "Y": -0.5j})  # sigma^+ up to the occupancy convention
    s = np.array([1, 1]) / math.sqrt(2)
    assert expectation_by_hadamard(s, op) == pytest.approx(0.5)


def test_static_correlator_two_mode_ground_state():
    enc = Encoding.jw(2)
    h = encode_hamiltonian(FermionHamiltonian(2, np.array([[0, 1.0], [1.0, 0]])), enc)
    e, psi = sector_ground_state(h, number_operator(range(2), enc), 1)
    assert e == pytest.approx(-1.0)
    assert static_correlator(psi, 0, 1, enc) == pytest.approx(-0.5)


def test_static_correlator_bk_matches_jw():
    spec = HubbardSpec(1, 2, 0.7, 1.0)
    outs = []
    for kind in ("JW", "BK"):
        lab = encode_hubbard(spec, kind)
        from fermicav.models import build_hubbard

        _, order, _ = build_hubbard(spec)
        enc = Encoding(kind, order)
        _, psi = sector_ground_state(lab.hamiltonian, number_operator(range(4), enc), 2)
        outs.append(static_correlator(psi, 0, 1, enc))
    assert outs[0] == pytest.approx(outs[1], abs=1e-10)


def free_mode(eps: float) -> tuple[PauliSum, Encoding]:
    enc = Encoding.jw(1)
    return encode_hamiltonian(FermionHamiltonian(1, np.array([[eps]])), enc), enc


def test_correlator_equal_time_is_one(hubbard22):
    r = dynamical_correlator(hubbard22.h, hubbard22.psi, 2, 2, 0.5, 3, hubbard22.enc)
    assert r.qq[0] == pytest.approx(1.0, abs=1e-12)


def test_free_mode_particle_propagator():
    h, enc = free_mode(0.7)
    r = dynamical_correlator(h, np.array([1, 0]), 0, 0, 0.1, 50, enc)
    assert np.allclose(r.G_p, np.exp(-0.7j * r.times), atol=1e-12)
    assert np.allclose(r.G_h, 0, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_compiled_correlator_matches_exact(kind, hubbard22):
    kw = dict(i=0, j=0, dt=0.5, n_steps=4, enc=hubbard22.enc)
    ex = dynamical_correlator(hubbard22.h, hubbard22.psi, **kw)
    b = Backend(kind, n_ancillae=4) if kind == "cavity_parallel" else Backend(kind)
    co = dynamical_correlator(hubbard22.h, hubbard22.psi, backend=b, grouping=hubbard22.groups, **kw)
    # compiled runs carry first-order Trotter error only
    assert np.abs(co.qq - ex.qq).max() < 0.05
    assert np.abs(co.qp - ex.qp).max() < 0.05
    assert co.qq[0] == pytest.approx(1.0, abs=1e-12)


def test_spectral_free_mode_peak_and_sum_rule():
    eps = 0.7
    h, enc = free_mode(eps)
    r = dynamical_correlator(h, np.array([1, 0]), 0, 0, 0.05, 2000, enc)
    om = np.linspace(-3, 3, 3001)
    a = spectral_function(r, om, eta=0.05)
    assert om[np.argmax(a)] == pytest.approx(eps, abs=0.005)
    assert a.min() > -1e-3
    # Lorentzian of unit weight: int A dw / 2 pi = 1, up to tails beyond the grid
    assert np.trapezoid(a, om) / (2 * np.pi) == pytest.approx(1.0, abs=0.03)


def test_spectral_hole_only_peak_follows_formula():
    # G^h = e^{+i eps t} enters with e^{-i w t}, so the Lorentzian sits at w = +eps
    t = 0.05 * np.arange(2001)
    eps = 0.7
    r = CorrelatorResult(t, np.exp(1j * eps * t), 1j * np.exp(1j * eps * t))
    assert np.allclose(r.G_p, 0) and np.allclose(r.G_h, np.exp(1j * eps * t))
    om = np.linspace(-3, 3, 3001)
    a = spectral_function(r, om, eta=0.05)
    assert om[np.argmax(a)] == pytest.approx(eps, abs=0.005)


def test_spectral_eta_positive():
    r = CorrelatorResult(np.arange(3.0), np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        spectral_function(r, np.zeros(1), eta=0.0)


def test_hubbard_two_peaks_separated_by_u(hubbard22):
    r = dynamical_correlator(hubbard22.h, hubbard22.psi, 0, 0, 0.5, 100, hubbard22.enc)
    om = np.linspace(-2, 2, 801)
    a = spectral_function(r, om)
    pk = sorted(find_peaks(om, a), key=lambda p: -p.height)[:2]
    sep = abs(pk[0].omega - pk[1].omega)
    assert sep == pytest.approx(hubbard22.spec.U, rel=0.15)
