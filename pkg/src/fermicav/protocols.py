"""Phase estimation, correlator and spectral-function drivers.

Control convention for phase estimation: the controlled evolution applies
``exp(-iHt)`` on the control's ``|+>`` component and ``exp(+iHt)`` on its
``|->`` component. A control starting in ``|0>`` then reads
``<Z_a> + i(-<Y_a>) = <psi| exp(2iHt) |psi>``, so spectral peaks sit at
``omega = 2E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backends import Backend, EvolutionPass, evolution_pass
from .circuits import CStringZ, H, HS, Gate, Phase, Rx
from .fermion_encoding import Encoding, encode_fermion_op, encode_majorana, FermionOp
from .pauli_core import PauliSum, PauliTerm, PauliWord
from .scheduler import CommutingGroup
from .simulator import (
    NoiseModel,
    State,
    TrajectoryConfig,
    _apply_gate_vec,
    evolution_operator,
    run_trajectories,
    x_observable,
    y_observable,
    z_observable,
)


# ---------------------------------------------------------------------------
# Fourier analysis


@dataclass(frozen=True)
class Peak:
    omega: float
    height: float
    fraction: float


@dataclass
class Spectrum:
    omega: np.ndarray
    magnitude: np.ndarray
    bin_width: float
    peaks: list[Peak]

    def dominant(self) -> Peak:
        return max(self.peaks, key=lambda p: p.height)


def fourier_spectrum(
    times: np.ndarray, signal: np.ndarray, window: str = "hann", pad: int = 4
) -> tuple[np.ndarray, np.ndarray, float]:
    """Windowed, zero-padded transform ``|sum_t w(t) s(t) e^{-i omega t}| / sum w``.

    Returns the ascending frequency grid, the magnitude and the unpadded bin
    width ``2 pi / (N dt)``. A unit-amplitude tone yields a unit peak.
    """
    t = np.asarray(times, float)
    s = np.asarray(signal, complex)
    n = t.size
    if n < 2:
        raise ValueError("need at least two samples")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("time grid must be uniform")
    w = window_weights(n, window)
    m = pad * n
    f = np.fft.fft(w * s, m) / w.sum()
    omega = 2 * np.pi * np.fft.fftfreq(m, dt)
    order = np.argsort(omega, kind="stable")
    return omega[order], np.abs(f[order]), 2 * np.pi / (n * dt)


def window_weights(n: int, window: str = "hann") -> np.ndarray:
    if window == "hann":
        return np.hanning(n + 2)[1:-1]
    if window in ("none", "rect"):
        return np.ones(n)
    raise ValueError(f"unknown window {window!r}")


def amplitude_at(times: np.ndarray, signal: np.ndarray, omega: float, window: str = "hann") -> np.ndarray:
    """Windowed transform magnitude at one frequency.

    ``signal`` may carry leading batch axes (for example one row per
    trajectory); the transform runs over the last axis.
    """
    t = np.asarray(times, float)
    w = window_weights(t.size, window)
    s = np.asarray(signal, complex)
    return np.abs(s @ (w * np.exp(-1j * omega * t))) / w.sum()


def find_peaks(omega: np.ndarray, mag: np.ndarray, rel: float = 0.1) -> list[Peak]:
    """Local maxima above ``rel`` times the global maximum, quadratically refined."""
    top = float(mag.max())
    found = []
    for k in range(1, len(mag) - 1):
        y0 = mag[k]
        if y0 < rel * top or not (y0 > mag[k - 1] and y0 >= mag[k + 1]):
            continue
        ym, yp = mag[k - 1], mag[k + 1]
        den = ym - 2 * y0 + yp
        d = 0.5 * (ym - yp) / den if den != 0 else 0.0
        step = omega[k + 1] - omega[k]
        found.append((float(omega[k] + d * step), float(y0 - 0.25 * (ym - yp) * d)))
    total = sum(h for _, h in found) or 1.0
    return [Peak(w, h, h / total) for w, h in found]


def spectrum_of(times: np.ndarray, signal: np.ndarray, window: str = "hann", pad: int = 4, rel: float = 0.1) -> Spectrum:
    om, mag, bw = fourier_spectrum(times, signal, window, pad)
    return Spectrum(om, mag, bw, find_peaks(om, mag, rel))


# ---------------------------------------------------------------------------
# Kitaev-Ramsey phase estimation


@dataclass
class PEAResult:
    times: np.ndarray
    re_za: np.ndarray
    im_za: np.ndarray
    spectrum: Spectrum
    shift: float = 0.0
    stderr_re: np.ndarray | None = None
    stderr_im: np.ndarray | None = None
    times_ns: np.ndarray | None = None
    samples: np.ndarray | None = None

    @property
    def peaks(self) -> list[Peak]:
        return self.spectrum.peaks

    def energies(self) -> list[float]:
        """Peak positions converted to energies, ``omega / 2`` plus the shift."""
        return [p.omega / 2 + self.shift for p in self.peaks]


def diagonal_part(h: PauliSum) -> PauliSum:
    """All words made only of ``I`` and ``Z``."""
    return PauliSum(h.n_qubits, tuple(t for t in h.terms if set(t.word.letters) <= {"I", "Z"}))


def _shifted(h: PauliSum, shift: float) -> PauliSum:
    if shift == 0:
        return h
    return (h + PauliSum(h.n_qubits, (PauliTerm(-shift, PauliWord.identity(h.n_qubits)),))).simplify(0.0)


def kitaev_pea(
    h: PauliSum,
    initial: np.ndarray,
    dt: float,
    n_steps: int,
    backend: Backend | None = None,
    noise: NoiseModel | None = None,
    cfg: TrajectoryConfig | None = None,
    grouping: Sequence[CommutingGroup] | None = None,
    subtract_diagonal: bool = False,
    window: str = "hann",
    pad: int = 4,
) -> PEAResult:
    """Ramsey phase estimation on the time grid ``k dt``, ``k = 0..n_steps``.

    ``backend=None`` uses exact evolution. Otherwise one compiled pass of
    ``n_steps`` controlled Trotter steps is simulated and the control is read
    after every step (the readout itself is taken as ideal). With ``noise``
    the readings are trajectory averages. ``subtract_diagonal`` removes the
    initial-state expectation of the diagonal part before evolving and adds it
    back to the reported energies.
    """
    psi = np.asarray(initial, complex)
    psi = psi / np.linalg.norm(psi)
    shift = 0.0
    if subtract_diagonal:
        d = diagonal_part(h)
        from .pauli_core import apply_sum

        shift = float(np.vdot(psi, apply_sum(d, psi)).real)
    hh = _shifted(h, shift)
    times = dt * np.arange(n_steps + 1)
    err_re = err_im = None
    times_ns = None
    samples = None
    if backend is None:
        from .simulator import exact_diagonalize

        w, v = exact_diagonalize(hh)
        c = v.conj().T @ psi
        z = np.array([np.sum(np.abs(c) ** 2 * np.exp(2j * w * t)) for t in times])
        re, im = z.real, z.imag
    else:
        ep = evolution_pass(hh, dt, n_steps, backend, grouping, controlled=True)
        n = ep.circuit.registers.n_wires
        state = State(n, np.kron(psi, _zero_ancillae(n - hh.n_qubits)))
        obs = {"Z": z_observable(ep.control, n), "Y": y_observable(ep.control, n)}
        cfg = cfg or TrajectoryConfig(1)
        res = run_trajectories(
            ep.circuit, state, noise or NoiseModel(), cfg, obs, backend.device,
            record_layers=(-1,) + _ends(ep), keep_samples=True,
        )
        samples = res.samples[:, :, 0] - 1j * res.samples[:, :, 1]
        re = res.mean[:, 0]
        im = -res.mean[:, 1]
        err_re, err_im = res.stderr[:, 0], res.stderr[:, 1]
        times_ns = res.times_ns
    spec = spectrum_of(times, re + 1j * im, window, pad)
    return PEAResult(times, re, im, spec, shift, err_re, err_im, times_ns, samples)


def _ends(ep: EvolutionPass) -> tuple[int, ...]:
    return ep.step_ends


def _zero_ancillae(k: int) -> np.ndarray:
    v = np.zeros(1 << k, complex)
    v[0] = 1
    return v


# ---------------------------------------------------------------------------
# iterative phase estimation


@dataclass
class IPEAResult:
    bits: tuple[int, ...]
    phase: float
    state: np.ndarray
    probabilities: tuple[float, ...] = ()


def _bits_to_phase(bits: Sequence[int]) -> float:
    return sum(b / 2 ** (k + 1) for k, b in enumerate(bits))


def ipea(
    h: PauliSum,
    eigenstate: np.ndarray,
    L: int,
    t0: float,
    backend: Backend | None = None,
    dt: float = 0.05,
    mode: str = "argmax",
    rng: np.random.Generator | None = None,
) -> IPEAResult:
    """Iterative phase estimation of ``exp(-i H t0)`` with eigenphase ``2 pi phi``.

    Rounds run ``k = L..1``. In the control's ``|+>/|->`` basis the controlled
    evolution for time ``t0 2^(k-2)`` imprints ``exp(2 pi i 2^(k-1) phi)`` on
    ``|+>`` relative to ``|->``; a corrective phase built from the bits already
    measured is applied to ``|+>`` and a ``Z`` readout of the control yields
    ``j_k``. ``mode="argmax"`` takes the likelier outcome, ``"sample"`` draws.
    ``backend=None`` uses exact evolution; otherwise compiled Trotter circuits
    with step ``dt``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if mode not in ("argmax", "sample"):
        raise ValueError("mode must be 'argmax' or 'sample'")
    rng = rng or np.random.default_rng(0)
    psi = np.asarray(eigenstate, complex)
    psi = psi / np.linalg.norm(psi)
    n = h.n_qubits
    bits: dict[int, int] = {}
    probs = []
    for k in range(L, 0, -1):
        t = t0 * 2.0 ** (k - 2)
        full = _controlled_state(h, psi, t, backend, dt)
        omega = 2 * np.pi * sum(bits[m] / 2 ** (m - k + 1) for m in range(k + 1, L + 1))
        nw = int(round(math.log2(full.size)))
        ctrl = n
        for g in (H(ctrl), Phase(ctrl, omega), H(ctrl)):
            full = _apply_gate_vec(full, g, nw)
        t_full = full.reshape((2,) * nw)
        p1 = float(np.sum(np.abs(np.take(t_full, 1, axis=ctrl)) ** 2))
        if mode == "argmax":
            bit = int(p1 > 0.5)
        else:
            bit = int(rng.random() < p1)
        probs.append(p1 if bit else 1 - p1)
        bits[k] = bit
        # project back onto the data register for the next round
        kept = np.take(t_full, bit, axis=ctrl).reshape(-1)
        nrm = np.linalg.norm(kept)
        if nrm > 1e-12:
            psi = kept / nrm
    ordered = tuple(bits[k] for k in range(1, L + 1))
    return IPEAResult(ordered, _bits_to_phase(ordered), psi, tuple(probs))


def _controlled_state(h: PauliSum, psi: np.ndarray, t: float, backend: Backend | None, dt: float) -> np.ndarray:
    """Data (x) control state after the controlled evolution, control last and
    every other ancilla traced away by projection onto its initial value."""
    n = h.n_qubits
    if backend is None:
        u = evolution_operator(h, t)
        a = u @ psi
        b = u.conj().T @ psi
        # control |0> = (|+> + |->)/sqrt2 -> |0> (a + b)/2 + |1> (a - b)/2
        return np.stack([(a + b) / 2, (a - b) / 2], axis=1).reshape(-1)
    steps = max(1, int(round(abs(t) / dt)))
    ep = evolution_pass(h, abs(t) / steps, steps, backend, controlled=True)
    if t < 0:
        raise ValueError("negative evolution time")
    c = ep.circuit
    nw = c.registers.n_wires
    vec = np.kron(psi, _zero_ancillae(nw - n))
    for g in c.gates():
        vec = _apply_gate_vec(vec, g, nw)
    tens = vec.reshape((2,) * nw)
    # keep the control axis, fix other ancillae to their dominant value
    axes = [w for w in range(n, nw) if w != ep.control]
    sub = tens
    for w in sorted(axes, reverse=True):
        idx = 0 if np.linalg.norm(np.take(sub, 0, axis=w)) >= np.linalg.norm(np.take(sub, 1, axis=w)) else 1
        sub = np.take(sub, idx, axis=w)
    out = sub.reshape(-1)
    return out / np.linalg.norm(out)


# ---------------------------------------------------------------------------
# correlators


def controlled_word_layers(word: PauliWord, coeff_sign: complex, ancilla: int, on_zero: bool = False) -> list[list[Gate]]:
    """Controlled ``coeff_sign * word`` through one cavity string.

    ``coeff_sign`` must be a unit phase; it is applied as an ancilla phase.
    ``on_zero`` conditions on the ancilla being ``|0>``.
    """
    letters = [(q, p) for q, p in enumerate(word.letters) if p != "I"]
    layers: list[list[Gate]] = []
    if on_zero:
        layers.append([Rx(ancilla, math.pi)])
    pre = [H(q) if p == "X" else HS(q) for q, p in letters if p in "XY"]
    post = [H(q) if p == "X" else HS(q, dag=True) for q, p in letters if p in "XY"]
    if pre:
        layers.append(pre)
    if letters:
        layers.append([CStringZ(ancilla, [q for q, _ in letters])])
    if post:
        layers.append(post)
    ph = complex(coeff_sign)
    if abs(abs(ph) - 1) > 1e-12:
        raise ValueError("controlled word needs a unit-modulus coefficient")
    ang = math.atan2(ph.imag, ph.real)
    if abs(ang) > 1e-15:
        layers.append([Phase(ancilla, ang)])
    if on_zero:
        # undo the flip; Rx(pi) Rx(-pi) = I, phases on |1> become phases on |0>
        layers.append([Rx(ancilla, -math.pi)])
    return layers


def hadamard_test(state: np.ndarray, word: PauliWord, phi: float = 0.0) -> float:
    """``<Z_a>`` after H, controlled word, ``Phase(-phi)``, H on a fresh ancilla.

    Equals ``Re(e^{-i phi} <word>)``: ``phi = 0`` gives the real part and
    ``phi = pi/2`` the imaginary part.
    """
    psi = np.asarray(state, complex)
    n = word.n_qubits
    nw = n + 1
    vec = np.kron(psi, np.array([1, 0], complex))
    layers = [[H(n)]] + controlled_word_layers(word, 1.0, n) + [[Phase(n, -phi)], [H(n)]]
    for l in layers:
        for g in l:
            vec = _apply_gate_vec(vec, g, nw)
    return z_observable(n, nw)(vec) / float(np.vdot(psi, psi).real)


def expectation_by_hadamard(state: np.ndarray, op: PauliSum) -> complex:
    """Complex expectation of a Pauli sum, term by term through Hadamard tests."""
    total = 0j
    for t in op.terms:
        if t.word.is_identity():
            val = 1.0 + 0j
        else:
            val = complex(hadamard_test(state, t.word, 0.0), hadamard_test(state, t.word, math.pi / 2))
        total += t.coeff * val
    return total


def static_correlator(state: np.ndarray, i: int, j: int, enc: Encoding) -> complex:
    """``<c_i^dag c_j>`` assembled from Hadamard tests of its Pauli terms."""
    op = encode_fermion_op(FermionOp(((i, True), (j, False))), enc).simplify()
    return expectation_by_hadamard(state, op)


@dataclass
class CorrelatorResult:
    times: np.ndarray
    qq: np.ndarray
    qp: np.ndarray
    stderr_qq: np.ndarray | None = None
    stderr_qp: np.ndarray | None = None

    @property
    def G_p(self) -> np.ndarray:
        return (self.qq + 1j * self.qp) / 2

    @property
    def G_h(self) -> np.ndarray:
        return (self.qq - 1j * self.qp) / 2


def _majorana_term(j: int, kind: str, enc: Encoding) -> PauliTerm:
    (t,) = encode_majorana(j, kind, enc).terms
    return t


def _ramsey_readout(word: PauliWord, sign: complex, anc: int, n: int) -> tuple:
    """Observables reading ``Re`` and ``Im`` of the Ramsey coherence after an
    ideal anti-controlled ``sign * word``."""
    layers = controlled_word_layers(word, sign, anc, on_zero=True)
    gates = [g for l in layers for g in l]
    fx, fy = x_observable(anc, n), y_observable(anc, n)

    def rotated(psi: np.ndarray) -> np.ndarray:
        for g in gates:
            psi = _apply_gate_vec(psi, g, n)
        return psi

    return (lambda p: fx(rotated(p))), (lambda p: fy(rotated(p)))


def dynamical_correlator(
    h: PauliSum,
    state: np.ndarray,
    i: int,
    j: int,
    dt: float,
    n_steps: int,
    enc: Encoding,
    backend: Backend | None = None,
    noise: NoiseModel | None = None,
    cfg: TrajectoryConfig | None = None,
    grouping: Sequence[CommutingGroup] | None = None,
) -> CorrelatorResult:
    """``<q_i(t) q_j(0)>`` and ``<q_i(t) p_j(0)>`` on ``t = k dt``.

    Ramsey circuit: ancilla ``|+>``, controlled Majorana ``m_j``, the Trotter
    evolution on the data, anti-controlled ``q_i`` and an ``X``/``Y`` readout
    (the last two taken as ideal, read after every step). ``backend=None``
    uses exact evolution.
    """
    psi = np.asarray(state, complex)
    psi = psi / np.linalg.norm(psi)
    times = dt * np.arange(n_steps + 1)
    qi = _majorana_term(i, "q", enc)
    out = {}
    errs = {}
    for kind in ("q", "p"):
        mj = _majorana_term(j, kind, enc)
        if backend is None:
            from .simulator import exact_diagonalize
            from .pauli_core import apply_word

            w, v = exact_diagonalize(h)
            right = mj.coeff * apply_word(mj.word, psi)
            vals = []
            for t in times:
                ph = np.exp(-1j * w * t)
                ut = lambda x: v @ (ph * (v.conj().T @ x))  # noqa: E731
                left = qi.coeff.conjugate() * apply_word(qi.word, ut(psi))
                vals.append(np.vdot(left, ut(right)))
            out[kind] = np.array(vals)
            errs[kind] = None
            continue
        anc = h.n_qubits
        head = [[H(anc)]] + controlled_word_layers(mj.word, mj.coeff, anc)
        ep = evolution_pass(h, dt, n_steps, backend, grouping, reserve=1, head=head)
        n = ep.circuit.registers.n_wires
        fx, fy = _ramsey_readout(qi.word, qi.coeff, anc, n)
        st = State(n, np.kron(psi, _zero_ancillae(n - h.n_qubits)))
        res = run_trajectories(
            ep.circuit,
            st,
            noise or NoiseModel(),
            cfg or TrajectoryConfig(1),
            {"X": fx, "Y": fy},
            backend.device,
            record_layers=(ep.head_end,) + ep.step_ends,
        )
        out[kind] = res.mean[:, 0] + 1j * res.mean[:, 1]
        errs[kind] = np.hypot(res.stderr[:, 0], res.stderr[:, 1])
    return CorrelatorResult(times, out["q"], out["p"], errs["q"], errs["p"])


def spectral_function(corr: CorrelatorResult, omega: np.ndarray, eta: float | None = None) -> np.ndarray:
    """``A = -2 Im G`` with
    ``G(w) = -i [ int e^{i(w + i eta) t} G^p(t) dt + int e^{-i(w - i eta) t} G^h(t) dt ]``
    by trapezoidal quadrature over the recorded grid. ``eta`` defaults to
    ``2 pi / span``.
    """
    t = corr.times
    span = float(t[-1] - t[0])
    if eta is None:
        eta = 2 * np.pi / span
    if not eta > 0:
        raise ValueError("eta must be positive")
    om = np.asarray(omega, float)[:, None]
    damp = np.exp(-eta * t)[None, :]
    kp = np.exp(1j * om * t[None, :]) * damp * corr.G_p[None, :]
    kh = np.exp(-1j * om * t[None, :]) * damp * corr.G_h[None, :]
    g = -1j * (np.trapezoid(kp, t, axis=1) + np.trapezoid(kh, t, axis=1))
    return -2 * g.imag


def spectral_peaks(omega: np.ndarray, a: np.ndarray, rel: float = 0.1) -> list[Peak]:
    return find_peaks(np.asarray(omega, float), np.asarray(a, float), rel)
