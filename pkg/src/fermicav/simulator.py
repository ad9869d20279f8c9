"""Dense statevector execution, exact oracles and quantum-trajectory noise."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .circuits import (
    MEASURE_KINDS,
    Circuit,
    DeviceModel,
    Gate,
    Registers,
    apply_unitary_gate,
    layer_durations,
)
from .pauli_core import ORACLE_CAP, OracleSizeError, PauliSum, apply_sum, to_matrix

NORM_ATOL = 1e-10
BRANCH_CUTOFF = 1e-14


class WireMismatchError(ValueError):
    """State and circuit disagree on the number of wires."""


class NonHermitianError(ValueError):
    """Operator expected to be Hermitian is not."""


class NoiseScheduleWarning(UserWarning):
    """Noise rates are nonzero but the schedule gives them no time to act."""


@dataclass
class State:
    """Statevector over ``n_wires`` wires; wire 0 is the most significant bit."""

    n_wires: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 1 << self.n_wires:
            raise WireMismatchError(f"{a.size} amplitudes for {self.n_wires} wires")
        self.amplitudes = a

    @classmethod
    def zero(cls, n_wires: int) -> "State":
        a = np.zeros(1 << n_wires, dtype=complex)
        a[0] = 1
        return cls(n_wires, a)

    @classmethod
    def basis(cls, n_wires: int, index: int) -> "State":
        a = np.zeros(1 << n_wires, dtype=complex)
        a[index] = 1
        return cls(n_wires, a)

    @classmethod
    def product(cls, data: np.ndarray, ancilla_bits: Sequence[int] = ()) -> "State":
        """Data vector tensored with computational-basis ancilla wires."""
        vec = np.asarray(data, dtype=complex).reshape(-1)
        n_data = int(round(math.log2(vec.size)))
        for b in ancilla_bits:
            e = np.zeros(2, dtype=complex)
            e[int(b)] = 1
            vec = np.kron(vec, e)
        return cls(n_data + len(ancilla_bits), vec)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "State":
        return State(self.n_wires, self.amplitudes.copy())


@dataclass
class Branch:
    probability: float
    outcomes: dict
    state: State


def _apply_gate_vec(psi: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply a unitary gate to a flat vector or a ``(2^n, batch)`` matrix."""
    batch = psi.shape[1] if psi.ndim == 2 else 1
    out = apply_unitary_gate(psi.reshape((2,) * n + (batch,)), g, n)
    return out.reshape(psi.shape)


def _project(psi: np.ndarray, wire: int, bit: int, n: int) -> np.ndarray:
    t = psi.reshape((2,) * n + (-1,)).copy()
    idx = [slice(None)] * (n + 1)
    idx[wire] = 1 - bit
    t[tuple(idx)] = 0
    return t.reshape(psi.shape)


def _flip(psi: np.ndarray, wire: int, n: int) -> np.ndarray:
    t = psi.reshape((2,) * n + (-1,))
    return np.flip(t, axis=wire).reshape(psi.shape).copy()


def _bell_unmeasured(g: Gate) -> list[Gate]:
    """Unitary part of a Bell measurement: CNOT(a->b), then H on a."""
    from .circuits import CNOT, H

    a, b = g.wires
    return [CNOT(a, b), H(a)]


def _measure_keys(g: Gate) -> list[tuple[int, str]]:
    if g.kind == "Measure":
        return [(g.wires[0], g.keys[0])]
    return [(g.wires[0], g.keys[0]), (g.wires[1], g.keys[1])]


def _fires(g: Gate, outcomes: Mapping[str, int]) -> bool:
    try:
        return bool(sum(outcomes[k] for k in g.keys) & 1)
    except KeyError as e:
        raise KeyError(f"classical control reads unknown key {e.args[0]!r}") from None


def run(
    c: Circuit,
    initial: State | None = None,
    mode: str = "enumerate",
    rng: np.random.Generator | None = None,
) -> State | list[Branch]:
    """Execute a circuit.

    Measurement-free circuits return the final state. With measurements,
    ``mode="enumerate"`` returns every branch with its Born probability and
    normalized post-measurement state; ``mode="sample"`` draws one branch and
    returns it as a single-element list.
    """
    n = c.registers.n_wires
    initial = initial or State.zero(n)
    if initial.n_wires != n:
        raise WireMismatchError(f"state has {initial.n_wires} wires, circuit {n}")
    if not c.has_measurements():
        psi = initial.amplitudes.copy()
        for g in c.gates():
            psi = _apply_gate_vec(psi, g, n)
        return State(n, psi)
    if mode not in ("enumerate", "sample"):
        raise ValueError("mode must be 'enumerate' or 'sample'")
    rng = rng or np.random.default_rng(0)
    raw = run_branches(c, initial.amplitudes.copy(), rng if mode == "sample" else None)
    out = []
    for outcomes, psi in raw:
        p = float(np.vdot(psi, psi).real)
        out.append(Branch(p, outcomes, State(n, psi / math.sqrt(p))))
    return out


def run_branches(
    c: Circuit, psi: np.ndarray, rng: np.random.Generator | None = None
) -> list[tuple[dict, np.ndarray]]:
    """Unnormalized branch enumeration.

    ``psi`` may be a vector or a ``(2^n, batch)`` matrix; with a batch every
    branch carries the projected (unnormalized) columns, so each branch is a
    Kraus operator applied to the batch. With ``rng`` one branch is sampled
    using the total batch weight.
    """
    n = c.registers.n_wires
    branches: list[tuple[dict, np.ndarray]] = [({}, psi)]
    for g in c.gates():
        nxt: list[tuple[dict, np.ndarray]] = []
        for outcomes, v in branches:
            if g.kind == "ClassicallyControlled":
                if _fires(g, outcomes):
                    v = _apply_gate_vec(v, g.inner, n)
                nxt.append((outcomes, v))
            elif g.kind in MEASURE_KINDS:
                if g.kind == "BellMeasure":
                    for u in _bell_unmeasured(g):
                        v = _apply_gate_vec(v, u, n)
                parts = [(outcomes, v)]
                for wire, key in _measure_keys(g):
                    split = []
                    for oc, w in parts:
                        for bit in (0, 1):
                            pw = _project(w, wire, bit, n)
                            split.append(({**oc, key: bit}, pw))
                    parts = split
                weights = [float(np.vdot(w, w).real) for _, w in parts]
                total = sum(weights)
                if rng is not None:
                    probs = np.array(weights) / total
                    k = int(rng.choice(len(parts), p=probs))
                    oc, w = parts[k]
                    nxt.append((oc, w * math.sqrt(total / weights[k])))
                else:
                    nxt += [p for p, wt in zip(parts, weights) if wt > BRANCH_CUTOFF * max(total, 1e-300)]
            else:
                nxt.append((outcomes, _apply_gate_vec(v, g, n)))
        branches = nxt
    return branches


def branch_channel(c: Circuit, ancilla_bits: Sequence[int] | None = None) -> np.ndarray:
    """Superoperator on the data register induced by a measured circuit.

    Ancilla wires start in the given computational state (default all 0) and
    are traced out at the end. Returns ``sum_b sum_a K_ba (x) conj(K_ba)``
    over branches ``b`` and final ancilla basis states ``a``.
    """
    reg = c.registers
    n = reg.n_wires
    if n > 22:
        raise OracleSizeError(f"{n} wires is too many for branch enumeration")
    nd = reg.n_data
    dd, da = 1 << nd, 1 << (n - nd)
    bits = list(ancilla_bits) if ancilla_bits is not None else [0] * (n - nd)
    a_idx = int("".join(str(b) for b in bits), 2) if bits else 0
    psi = np.zeros((dd, da, dd), dtype=complex)
    psi[np.arange(dd), a_idx, np.arange(dd)] = 1
    psi = psi.reshape(dd * da, dd)
    sup = np.zeros((dd * dd, dd * dd), dtype=complex)
    for _, k in run_branches(c, psi):
        k3 = k.reshape(dd, da, dd)
        for a in range(da):
            ka = k3[:, a, :]
            if np.any(ka):
                sup += np.kron(ka, ka.conj())
    return sup


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


# ---------------------------------------------------------------------------
# exact oracles


def _check_hermitian(h: PauliSum) -> None:
    if not h.is_hermitian():
        raise NonHermitianError("operator has complex coefficients")


def exact_diagonalize(h: PauliSum, cap: int = ORACLE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and column eigenvectors of a Hermitian Pauli sum."""
    _check_hermitian(h)
    m = to_matrix(h, cap)
    w, v = np.linalg.eigh(m)
    return w, v


def exact_evolve(h: PauliSum, t: float, s: State | np.ndarray, cap: int = ORACLE_CAP) -> State:
    """``exp(-i h t)`` applied through the eigendecomposition."""
    w, v = exact_diagonalize(h, cap)
    vec = s.amplitudes if isinstance(s, State) else np.asarray(s, dtype=complex)
    out = v @ (np.exp(-1j * w * t) * (v.conj().T @ vec))
    return State(h.n_qubits, out)


def evolution_operator(h: PauliSum, t: float, cap: int = ORACLE_CAP) -> np.ndarray:
    w, v = exact_diagonalize(h, cap)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def sector_ground_state(h: PauliSum, number: PauliSum, n_particles: int, cap: int = ORACLE_CAP) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of ``h`` inside a fixed particle-number sector."""
    m = to_matrix(h, cap)
    nvals = np.real(np.diag(to_matrix(number, cap)))
    idx = np.nonzero(np.abs(nvals - n_particles) < 1e-9)[0]
    if idx.size == 0:
        raise ValueError(f"no basis states with {n_particles} particles")
    sub = m[np.ix_(idx, idx)]
    w, v = np.linalg.eigh(sub)
    vec = np.zeros(m.shape[0], dtype=complex)
    vec[idx] = v[:, 0]
    return float(w[0]), vec


# ---------------------------------------------------------------------------
# expectation values


def _embed_sum(op: PauliSum, n: int, wires: Sequence[int] | None) -> PauliSum:
    if op.n_qubits == n and wires is None:
        return op
    wires = list(range(op.n_qubits)) if wires is None else list(wires)
    if len(wires) != op.n_qubits or max(wires, default=-1) >= n:
        raise WireMismatchError("operator does not fit the state")
    from .pauli_core import PauliTerm, PauliWord

    terms = []
    for t in op.terms:
        letters = ["I"] * n
        for q, p in enumerate(t.word.letters):
            letters[wires[q]] = p
        terms.append(PauliTerm(t.coeff, PauliWord("".join(letters))))
    return PauliSum(n, tuple(terms))


def expectation(s: State, op: PauliSum | int, wires: Sequence[int] | None = None) -> float:
    """``<s|op|s>`` for a Hermitian Pauli sum or ``Z`` on a single wire.

    ``wires`` places the operator's qubits onto state wires (default: the
    first ``op.n_qubits`` wires).
    """
    if isinstance(op, (int, np.integer)):
        t = s.amplitudes.reshape((2,) * s.n_wires)
        p1 = float(np.sum(np.abs(np.take(t, 1, axis=int(op))) ** 2))
        return 1.0 - 2.0 * p1 / float(np.vdot(s.amplitudes, s.amplitudes).real)
    _check_hermitian(op)
    full = _embed_sum(op, s.n_wires, wires)
    v = s.amplitudes
    val = np.vdot(v, apply_sum(full, v)) / np.vdot(v, v)
    return float(val.real)


def expectation_complex(s: State, op: PauliSum, wires: Sequence[int] | None = None) -> complex:
    full = _embed_sum(op, s.n_wires, wires)
    v = s.amplitudes
    return complex(np.vdot(v, apply_sum(full, v)) / np.vdot(v, v))


# ---------------------------------------------------------------------------
# quantum trajectories

KHZ_TO_PER_NS = 1e-6


@dataclass(frozen=True)
class NoiseModel:
    """Jump-operator rates in 1/ns.

    Qubit wires (data, dummy, Bell) carry ``sigma-``, ``sigma+`` and ``sigma_z``
    jumps; cavity wires carry ``a`` and ``a^dag`` on the two-level cavity.
    See :meth:`jumps` for the basis convention.
    """

    qubit_sigma_minus: float = 0.0
    qubit_sigma_plus: float = 0.0
    qubit_dephasing: float = 0.0
    cavity_decay: float = 0.0
    cavity_excitation: float = 0.0

    def __post_init__(self) -> None:
        for k, v in self.__dict__.items():
            if not v >= 0:
                raise ValueError(f"rate {k} must be >= 0")

    @classmethod
    def fig5(cls) -> "NoiseModel":
        """Rates of the reference hardware point: 10, 0.05, 50, 5 and 0 kHz."""
        return cls(
            qubit_sigma_minus=10.0 * KHZ_TO_PER_NS,
            qubit_sigma_plus=0.05 * KHZ_TO_PER_NS,
            qubit_dephasing=50.0 * KHZ_TO_PER_NS,
            cavity_decay=5.0 * KHZ_TO_PER_NS,
            cavity_excitation=0.0,
        )

    @classmethod
    def preset(cls, name: str) -> "NoiseModel":
        if name == "fig5":
            return cls.fig5()
        if name in ("none", "off"):
            return cls()
        raise ValueError(f"unknown noise preset {name!r}")

    def scaled(self, f: float) -> "NoiseModel":
        return NoiseModel(*(f * v for v in self.__dict__.values()))

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.__dict__.values())

    def jumps(self, registers: Registers) -> list[tuple[int, str, float, int | None]]:
        """``(wire, kind, rate, source)`` for every nonzero channel.

        ``kind`` is ``minus``, ``plus`` or ``z``; ``source`` is the basis bit a
        flip jump acts on (``None`` for dephasing). On qubit wires ``|0>`` is
        spin up, so ``sigma-`` takes ``|0>`` to ``|1>`` (an empty mode becomes
        occupied). On cavity wires ``a`` removes a photon, ``|1>`` to ``|0>``.
        """
        cav = set(registers.cavity_wires())
        out = []
        for w in range(registers.n_wires):
            if w in cav:
                chans = [("minus", self.cavity_decay, 1), ("plus", self.cavity_excitation, 0)]
            else:
                chans = [
                    ("minus", self.qubit_sigma_minus, 0),
                    ("plus", self.qubit_sigma_plus, 1),
                    ("z", self.qubit_dephasing, None),
                ]
            out += [(w, k, r, src) for k, r, src in chans if r > 0]
        return out


@dataclass(frozen=True)
class TrajectoryConfig:
    """``time_unit_ns``: physical ns per dimensionless Hamiltonian time unit."""

    n_trajectories: int = 50
    base_seed: int = 0
    time_unit_ns: float = 1000.0
    max_rate_step: float = 0.01

    def __post_init__(self) -> None:
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if not 0 < self.max_rate_step <= 0.1:
            raise ValueError("max_rate_step must lie in (0, 0.1]")


Observable = Callable[[np.ndarray], float]


def z_observable(wire: int, n: int) -> Observable:
    def f(psi: np.ndarray) -> float:
        t = psi.reshape((2,) * n)
        return 1.0 - 2.0 * float(np.sum(np.abs(np.take(t, 1, axis=wire)) ** 2))

    return f


def x_observable(wire: int, n: int) -> Observable:
    def f(psi: np.ndarray) -> float:
        t = psi.reshape((2,) * n)
        a0, a1 = np.take(t, 0, axis=wire), np.take(t, 1, axis=wire)
        return 2.0 * float(np.vdot(a0, a1).real)

    return f


def y_observable(wire: int, n: int) -> Observable:
    def f(psi: np.ndarray) -> float:
        t = psi.reshape((2,) * n)
        a0, a1 = np.take(t, 0, axis=wire), np.take(t, 1, axis=wire)
        return 2.0 * float(np.vdot(a0, a1).imag)

    return f


def pauli_observable(op: PauliSum, wires: Sequence[int] | None, n: int) -> Observable:
    full = _embed_sum(op, n, wires)

    def f(psi: np.ndarray) -> float:
        return float(np.vdot(psi, apply_sum(full, psi)).real)

    return f


@dataclass
class TrajectoryResult:
    times_ns: np.ndarray
    names: tuple[str, ...]
    mean: np.ndarray
    stderr: np.ndarray
    record_layers: tuple[int, ...]
    n_trajectories: int
    jump_counts: np.ndarray = field(default_factory=lambda: np.zeros(0))
    samples: np.ndarray | None = None

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        k = self.names.index(name)
        return self.mean[:, k], self.stderr[:, k]

    def to_csv(self, path: str | Path) -> None:
        write_timeseries_csv(path, self)


def write_timeseries_csv(path: str | Path, res: TrajectoryResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_ns", "observable_name", "mean", "stderr"])
        for i, t in enumerate(res.times_ns):
            for k, name in enumerate(res.names):
                w.writerow([f"{t:.6f}", name, f"{res.mean[i, k]:.12g}", f"{res.stderr[i, k]:.12g}"])


class _Noise:
    """Precomputed jump tables for one register layout."""

    def __init__(self, noise: NoiseModel, registers: Registers):
        self.n = registers.n_wires
        self.jumps = noise.jumps(registers)
        n = self.n
        idx = np.arange(1 << n)
        gamma = np.zeros(1 << n)
        for w, _, r, src in self.jumps:
            bit = (idx >> (n - 1 - w)) & 1
            if src is None:
                gamma += r
            else:
                gamma += r * (bit if src == 1 else 1 - bit)
        self.gamma = gamma
        self.gamma_max = float(gamma.max()) if self.jumps else 0.0

    def evolve(
        self, psi: np.ndarray, duration: float, rng: np.random.Generator, max_step: float, clock: list
    ) -> tuple[np.ndarray, int]:
        """Waiting-time evolution of an unnormalized state over ``duration``.

        ``clock[0]`` holds the current jump threshold: a jump fires on the first
        sub-step where the squared norm falls below it. Sub-steps satisfy
        ``gamma_max * dtau <= max_step``.
        """
        if not self.jumps or duration <= 0:
            return psi, 0
        n_jumps = 0
        remaining = duration
        while remaining > 0:
            n_sub = max(1, math.ceil(self.gamma_max * remaining / max_step))
            dtau = remaining / n_sub
            taus = dtau * np.arange(1, n_sub + 1)
            prob = np.abs(psi) ** 2
            norms = np.exp(-np.outer(taus, self.gamma)) @ prob
            hit = np.nonzero(norms <= clock[0])[0]
            if hit.size == 0:
                return psi * np.exp(-0.5 * self.gamma * remaining), n_jumps
            k = int(hit[0])
            psi = psi * np.exp(-0.5 * self.gamma * taus[k])
            psi = self._jump(psi, rng)
            n_jumps += 1
            clock[0] = rng.random()
            remaining -= taus[k]
            if remaining <= 1e-12 * duration:
                break
        return psi, n_jumps

    def _jump(self, psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        t = (np.abs(psi) ** 2).reshape((2,) * self.n)
        weights = []
        for w, _, r, src in self.jumps:
            if src is None:
                weights.append(r * float(t.sum()))
            else:
                weights.append(r * float(np.sum(np.take(t, src, axis=w))))
        cum = np.cumsum(weights)
        k = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(weights) - 1)
        w, _, _, src = self.jumps[k]
        if src is None:
            psi = psi.copy()
            tt = psi.reshape((2,) * self.n)
            idx = [slice(None)] * self.n
            idx[w] = 1
            tt[tuple(idx)] *= -1
        else:
            psi = _flip(_project(psi, w, src, self.n), w, self.n)
        return psi / np.linalg.norm(psi)


def _run_one(
    c: Circuit,
    psi: np.ndarray,
    noise: _Noise,
    durations: Sequence[float],
    observables: Sequence[Observable],
    record: set[int],
    rng: np.random.Generator,
    max_step: float,
) -> tuple[np.ndarray, int]:
    n = c.registers.n_wires
    rows = []
    outcomes: dict = {}
    jumps = 0
    clock = [rng.random()] if noise.jumps else [0.0]

    def read(v: np.ndarray) -> list[float]:
        nv = v / np.linalg.norm(v) if noise.jumps else v
        return [f(nv) for f in observables]

    if -1 in record:
        rows.append(read(psi))
    for li, layer in enumerate(c.layers):
        for g in layer:
            if g.kind == "ClassicallyControlled":
                if _fires(g, outcomes):
                    psi = _apply_gate_vec(psi, g.inner, n)
            elif g.kind in MEASURE_KINDS:
                (oc, v), = run_branches(Circuit(c.registers, ((g,),)), psi, rng)
                outcomes.update(oc)
                psi = v / np.linalg.norm(v) * np.linalg.norm(psi)
            else:
                psi = _apply_gate_vec(psi, g, n)
        psi, k = noise.evolve(psi, durations[li], rng, max_step, clock)
        jumps += k
        if li in record:
            rows.append(read(psi))
    return np.array(rows, dtype=float), jumps


def run_trajectories(
    c: Circuit,
    initial: State,
    noise: NoiseModel,
    cfg: TrajectoryConfig,
    observables: Mapping[str, Observable | PauliSum | int],
    device: DeviceModel | None = None,
    record_layers: Sequence[int] | None = None,
    keep_samples: bool = False,
) -> TrajectoryResult:
    """Quantum-jump average of observables after selected layers.

    Each layer applies its gates, then the noise acts for the layer duration
    from ``device``. Jumps are drawn on sub-steps with total rate times step at
    most ``cfg.max_rate_step``; between jumps the non-Hermitian drift (diagonal
    for single-wire jumps) is applied exactly. Trajectory ``i`` draws from ``default_rng([base_seed, i])``.
    ``record_layers`` defaults to every layer; index ``-1`` records the
    initial state. Integer observables mean ``Z`` on that wire.
    ``keep_samples`` stores every trajectory's readings in ``samples``.
    """
    n = c.registers.n_wires
    if initial.n_wires != n:
        raise WireMismatchError(f"state has {initial.n_wires} wires, circuit {n}")
    device = device or DeviceModel()
    durations = layer_durations(c, device)
    if not noise.is_zero and sum(durations) == 0:
        warnings.warn("nonzero noise rates over a zero-duration schedule", NoiseScheduleWarning, stacklevel=2)
    names = tuple(observables)
    fns: list[Observable] = []
    for v in observables.values():
        if isinstance(v, PauliSum):
            fns.append(pauli_observable(v, None, n))
        elif isinstance(v, (int, np.integer)):
            fns.append(z_observable(int(v), n))
        else:
            fns.append(v)
    rec = sorted(set(record_layers) if record_layers is not None else set(range(c.depth)))
    cum = np.concatenate([[0.0], np.cumsum(durations)])
    times = np.array([cum[i + 1] if i >= 0 else 0.0 for i in rec])
    nz = _Noise(noise, c.registers)
    m = cfg.n_trajectories
    jumps = np.zeros(m, dtype=int)
    if nz.gamma_max == 0 and not c.has_measurements():
        # every trajectory is the same unitary run
        rng = np.random.default_rng([cfg.base_seed, 0])
        rows, _ = _run_one(c, initial.amplitudes.copy(), nz, durations, fns, set(rec), rng, cfg.max_rate_step)
        samples = np.broadcast_to(rows, (m,) + rows.shape) if keep_samples else None
        return TrajectoryResult(times, names, rows, np.zeros_like(rows), tuple(rec), m, jumps, samples)
    total = None
    total_sq = None
    kept = []
    for i in range(m):
        rng = np.random.default_rng([cfg.base_seed, i])
        rows, jumps[i] = _run_one(c, initial.amplitudes.copy(), nz, durations, fns, set(rec), rng, cfg.max_rate_step)
        if keep_samples:
            kept.append(rows)
        total = rows.copy() if total is None else total + rows
        total_sq = rows**2 if total_sq is None else total_sq + rows**2
    mean = total / m
    if m > 1:
        var = np.maximum(total_sq / m - mean**2, 0.0) * m / (m - 1)
        err = np.sqrt(var / m)
    else:
        err = np.zeros_like(mean)
    samples = np.stack(kept) if keep_samples else None
    return TrajectoryResult(times, names, mean, err, tuple(rec), m, jumps, samples)
