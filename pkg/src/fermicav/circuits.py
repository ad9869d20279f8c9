"""Circuit intermediate representation, dense unitary oracle and cost metrics.

Wire layout of a :class:`Registers`: data qubits, then cavity ancillae, then
the optional dummy qubit, then Bell-pair wires (two per pair). Wire 0 is the
most significant bit of a basis index, consistent with Pauli words.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Literal, Sequence

import numpy as np

from .pauli_core import ORACLE_CAP, OracleSizeError

LOCAL_KINDS = frozenset(
    {"H", "S", "Sdag", "HS", "Rx", "Rz", "Phase", "CNOT", "CZ", "AncPhase", "BellPrep", "BellMeasure"}
)
COLLECTIVE_KINDS = frozenset({"CStringZ", "AncRx", "CCZ"})
MEASURE_KINDS = frozenset({"Measure", "BellMeasure"})
ALL_KINDS = LOCAL_KINDS | COLLECTIVE_KINDS | {"Measure", "ClassicallyControlled"}


class CircuitError(ValueError):
    """Invalid circuit construction."""


class UnsupportedError(ValueError):
    """Operation not supported for this circuit (e.g. measurements in unitary)."""


@dataclass(frozen=True)
class Registers:
    n_data: int
    n_cavity: int = 0
    has_dummy: bool = False
    n_bell_pairs: int = 0

    def __post_init__(self) -> None:
        if min(self.n_data, self.n_cavity, self.n_bell_pairs) < 0:
            raise CircuitError("register counts must be >= 0")

    @property
    def n_wires(self) -> int:
        return self.n_data + self.n_cavity + int(self.has_dummy) + 2 * self.n_bell_pairs

    def data(self, i: int) -> int:
        if not 0 <= i < self.n_data:
            raise CircuitError(f"data qubit {i} out of range")
        return i

    def cavity(self, i: int) -> int:
        if not 0 <= i < self.n_cavity:
            raise CircuitError(f"cavity ancilla {i} out of range")
        return self.n_data + i

    @property
    def dummy(self) -> int:
        if not self.has_dummy:
            raise CircuitError("registers have no dummy qubit")
        return self.n_data + self.n_cavity

    def bell(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.n_bell_pairs:
            raise CircuitError(f"Bell pair {k} out of range")
        base = self.n_data + self.n_cavity + int(self.has_dummy) + 2 * k
        return base, base + 1

    def cavity_wires(self) -> list[int]:
        return [self.n_data + i for i in range(self.n_cavity)]


@dataclass(frozen=True)
class Gate:
    """One IR operation.

    ``wires`` lists every wire touched. Kind-specific payload:

    * ``CStringZ``: ``strings`` = ((ancilla, (q, ...)), ...); several strings
      form one multi-mode pulse.
    * ``AncRx``: ``strings`` = ((ancilla, ()), ...) with angles in ``params``;
      ``control`` set for clock-conditioned rotations ``exp(-i th/2 X_a X_c)``.
    * ``CCZ``: ``sets`` of ancilla tuples, ``target`` wire.
    * ``HS``: ``params = (dag,)``; ``HS`` maps Y to Z, its dagger maps back.
    * measurements: ``keys``; ``ClassicallyControlled``: ``inner`` gate and
      ``keys`` whose parity triggers it.
    """

    kind: str
    wires: tuple[int, ...]
    params: tuple[float, ...] = ()
    strings: tuple[tuple[int, tuple[int, ...]], ...] = ()
    sets: tuple[tuple[int, ...], ...] = ()
    target: int = -1
    control: int = -1
    keys: tuple[str, ...] = ()
    inner: "Gate | None" = None

    def __post_init__(self) -> None:
        if self.kind not in ALL_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(set(self.wires)) != len(self.wires):
            raise CircuitError(f"{self.kind} repeats a wire: {self.wires}")
        if self.kind == "CStringZ":
            if not self.strings or any(len(q) == 0 for _, q in self.strings):
                raise CircuitError("CStringZ qubit-set must be nonempty")

    @property
    def is_collective(self) -> bool:
        k = self.inner.kind if self.kind == "ClassicallyControlled" and self.inner else self.kind
        return k in COLLECTIVE_KINDS

    def string_length(self) -> int:
        if self.kind == "CStringZ":
            return max(len(q) for _, q in self.strings)
        return 1

    def dump(self) -> str:
        ws = ",".join(str(w) for w in self.wires)
        extra: list[str] = []
        if self.params:
            extra.append(" ".join(f"{p:.12g}" for p in self.params))
        if self.kind == "CStringZ":
            extra.append("|".join(f"{a}:{' '.join(map(str, q))}" for a, q in self.strings))
        if self.kind == "CCZ":
            extra.append("|".join(" ".join(map(str, s)) for s in self.sets) + f">{self.target}")
        if self.control >= 0:
            extra.append(f"ctrl={self.control}")
        if self.keys:
            extra.append("keys=" + " ".join(self.keys))
        if self.inner is not None:
            extra.append("do=" + self.inner.dump())
        return f"{self.kind}({ws}" + (";" + ";".join(extra) if extra else "") + ")"


# ---------------------------------------------------------------------------
# constructors


def H(q: int) -> Gate:
    return Gate("H", (q,))


def S(q: int) -> Gate:
    return Gate("S", (q,))


def Sdag(q: int) -> Gate:
    return Gate("Sdag", (q,))


def HS(q: int, dag: bool = False) -> Gate:
    return Gate("HS", (q,), (float(dag),))


def Rx(q: int, theta: float) -> Gate:
    return Gate("Rx", (q,), (float(theta),))


def Rz(q: int, theta: float) -> Gate:
    return Gate("Rz", (q,), (float(theta),))


def Phase(q: int, phi: float) -> Gate:
    return Gate("Phase", (q,), (float(phi),))


def CNOT(c: int, t: int) -> Gate:
    return Gate("CNOT", (c, t))


def CZ(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


def CStringZ(ancilla: int, qubits: Sequence[int]) -> Gate:
    return MultiCStringZ([(ancilla, qubits)])


def MultiCStringZ(strings: Sequence[tuple[int, Sequence[int]]]) -> Gate:
    strs = tuple((int(a), tuple(int(q) for q in qs)) for a, qs in strings)
    wires: list[int] = []
    for a, qs in strs:
        for w in (a, *qs):
            if w not in wires:
                wires.append(w)
    anc = [a for a, _ in strs]
    if len(set(anc)) != len(anc):
        raise CircuitError("each ancilla may control one string per pulse")
    return Gate("CStringZ", tuple(wires), (), strs)


def AncRx(ancilla: int, theta: float, control: int | None = None) -> Gate:
    return MultiAncRx([(ancilla, theta)], control)


def MultiAncRx(rotations: Sequence[tuple[int, float]], control: int | None = None) -> Gate:
    wires = tuple(int(a) for a, _ in rotations) + ((int(control),) if control is not None else ())
    return Gate(
        "AncRx",
        wires,
        tuple(float(t) for _, t in rotations),
        tuple((int(a), ()) for a, _ in rotations),
        control=-1 if control is None else int(control),
    )


def AncPhase(ancilla: int, phi: float) -> Gate:
    return Gate("AncPhase", (ancilla,), (float(phi),))


def CCZ(sets: Sequence[Sequence[int]], target: int) -> Gate:
    ss = tuple(tuple(int(a) for a in s) for s in sets)
    wires: list[int] = []
    for s in ss:
        for a in s:
            if a not in wires:
                wires.append(a)
    return Gate("CCZ", tuple(wires) + (int(target),), (), (), ss, target=int(target))


def BellPrep(a: int, b: int) -> Gate:
    return Gate("BellPrep", (a, b))


def BellMeasure(a: int, b: int, key_a: str, key_b: str) -> Gate:
    return Gate("BellMeasure", (a, b), keys=(key_a, key_b))


def Measure(q: int, key: str) -> Gate:
    return Gate("Measure", (q,), keys=(key,))


def ClassicallyControlled(inner: Gate, keys: Sequence[str]) -> Gate:
    return Gate("ClassicallyControlled", inner.wires, keys=tuple(keys), inner=inner)


def inverse(g: Gate) -> Gate:
    """Inverse of a unitary gate."""
    k = g.kind
    if k in ("H", "CNOT", "CZ", "CStringZ", "CCZ"):
        return g
    if k == "S":
        return Sdag(g.wires[0])
    if k == "Sdag":
        return S(g.wires[0])
    if k == "HS":
        return HS(g.wires[0], not bool(g.params[0]))
    if k in ("Rx", "Rz", "Phase", "AncPhase", "AncRx"):
        return Gate(k, g.wires, tuple(-p for p in g.params), g.strings, g.sets, g.target, g.control)
    raise UnsupportedError(f"{k} has no unitary inverse")


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class Circuit:
    registers: Registers
    layers: tuple[tuple[Gate, ...], ...] = ()

    def __post_init__(self) -> None:
        layers = tuple(tuple(l) for l in self.layers if len(l) > 0)
        object.__setattr__(self, "layers", layers)
        n = self.registers.n_wires
        keys: set[str] = set()
        for li, layer in enumerate(layers):
            used: set[int] = set()
            for g in layer:
                for w in g.wires:
                    if not 0 <= w < n:
                        raise CircuitError(f"{g.kind} wire {w} outside 0..{n - 1}")
                    if w in used:
                        raise CircuitError(f"layer {li} reuses wire {w}")
                    used.add(w)
                if g.kind in MEASURE_KINDS:
                    for k in g.keys:
                        if k in keys:
                            raise CircuitError(f"duplicate measurement key {k!r}")
                        keys.add(k)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gates(self) -> Iterable[Gate]:
        for layer in self.layers:
            yield from layer

    def has_measurements(self) -> bool:
        return any(g.kind in MEASURE_KINDS or g.kind == "ClassicallyControlled" for g in self.gates())

    def dump(self) -> str:
        """One line per layer."""
        return "\n".join(" ".join(g.dump() for g in layer) for layer in self.layers) + "\n"


class CircuitBuilder:
    """Mutable helper that appends layers; ``pack`` places gates ASAP."""

    def __init__(self, registers: Registers):
        self.registers = registers
        self.layers: list[list[Gate]] = []
        self._frontier: dict[int, int] = {}

    def layer(self, gates: Iterable[Gate]) -> "CircuitBuilder":
        gates = list(gates)
        if gates:
            self.layers.append(gates)
            top = len(self.layers)
            for g in gates:
                for w in g.wires:
                    self._frontier[w] = top
        return self

    def gate(self, g: Gate) -> "CircuitBuilder":
        return self.layer([g])

    def pack(self, g: Gate) -> "CircuitBuilder":
        """Place a gate in the earliest layer after every gate sharing a wire."""
        start = max((self._frontier.get(w, 0) for w in g.wires), default=0)
        if start < len(self.layers):
            self.layers[start].append(g)
        else:
            self.layers.append([g])
        for w in g.wires:
            self._frontier[w] = start + 1
        return self

    def extend(self, c: Circuit, repack: bool = False) -> "CircuitBuilder":
        if c.registers != self.registers:
            raise CircuitError("register mismatch")
        if repack:
            for layer in c.layers:
                for g in layer:
                    self.pack(g)
        else:
            for layer in c.layers:
                self.layer(layer)
        return self

    def build(self) -> Circuit:
        return Circuit(self.registers, tuple(tuple(l) for l in self.layers))


def compose(c1: Circuit, c2: Circuit, repack: bool = False) -> Circuit:
    """``c1`` then ``c2``; ``repack`` moves gates to their earliest legal layer."""
    if c1.registers != c2.registers:
        raise CircuitError("register mismatch")
    b = CircuitBuilder(c1.registers)
    b.extend(c1, repack=repack)
    b.extend(c2, repack=repack)
    return b.build()


def with_registers(c: Circuit, registers: Registers, wire_map: dict[int, int] | None = None) -> Circuit:
    """Re-home a circuit onto larger registers (identity wire map by default)."""
    if wire_map is None:
        if registers.n_wires < c.registers.n_wires:
            raise CircuitError("target registers are smaller")
        return Circuit(registers, c.layers)
    return Circuit(registers, tuple(tuple(remap(g, wire_map) for g in l) for l in c.layers))


def remap(g: Gate, m: dict[int, int]) -> Gate:
    f = lambda w: m.get(w, w)  # noqa: E731
    return Gate(
        g.kind,
        tuple(f(w) for w in g.wires),
        g.params,
        tuple((f(a), tuple(f(q) for q in qs)) for a, qs in g.strings),
        tuple(tuple(f(a) for a in s) for s in g.sets),
        f(g.target) if g.target >= 0 else -1,
        f(g.control) if g.control >= 0 else -1,
        g.keys,
        remap(g.inner, m) if g.inner is not None else None,
    )


def inverse_circuit(c: Circuit) -> Circuit:
    return Circuit(c.registers, tuple(tuple(inverse(g) for g in l) for l in reversed(c.layers)))


# ---------------------------------------------------------------------------
# dense kernels

_SQ2 = 1 / math.sqrt(2)
_MAT_H = np.array([[1, 1], [1, -1]], complex) * _SQ2
_MAT_S = np.diag([1, 1j])
_MAT_SDAG = np.diag([1, -1j])
_MAT_HS = _MAT_H @ _MAT_SDAG
_MAT_X = np.array([[0, 1], [1, 0]], complex)
_MAT_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], complex)
_MAT_BELL = _MAT_CNOT @ np.kron(_MAT_H, np.eye(2))


def gate_matrix(g: Gate) -> np.ndarray:
    """Small dense matrix of a 1- or 2-wire gate over ``g.wires``."""
    k = g.kind
    if k == "H":
        return _MAT_H
    if k == "S":
        return _MAT_S
    if k == "Sdag":
        return _MAT_SDAG
    if k == "HS":
        return _MAT_HS.conj().T if g.params[0] else _MAT_HS
    if k == "Rx":
        t = g.params[0] / 2
        return np.array([[math.cos(t), -1j * math.sin(t)], [-1j * math.sin(t), math.cos(t)]])
    if k == "Rz":
        t = g.params[0] / 2
        return np.diag([np.exp(-1j * t), np.exp(1j * t)])
    if k in ("Phase", "AncPhase"):
        return np.diag([1, np.exp(1j * g.params[0])])
    if k == "CNOT":
        return _MAT_CNOT
    if k == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if k == "BellPrep":
        return _MAT_BELL
    raise UnsupportedError(f"no small matrix for {k}")


def _apply_small(psi: np.ndarray, mat: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    k = len(wires)
    m = mat.reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(wires)))
    return np.moveaxis(out, list(range(k)), list(wires))


@lru_cache(maxsize=256)
def _bits(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> (n - 1 - np.arange(n))) & 1).astype(np.int8)


def _diag_vector(g: Gate, n: int) -> np.ndarray:
    b = _bits(n)
    if g.kind == "CStringZ":
        sign = np.ones(1 << n, dtype=np.int8)
        for a, qs in g.strings:
            par = b[:, list(qs)].sum(axis=1) & 1
            sign = sign * (1 - 2 * (b[:, a] & par)).astype(np.int8)
        return sign.astype(complex)
    if g.kind == "CCZ":
        tgt = b[:, g.target]
        flip = np.zeros(1 << n, dtype=np.int8)
        for s in g.sets:
            flip ^= np.all(b[:, list(s)] == 1, axis=1).astype(np.int8)
        return (1 - 2 * (flip & tgt)).astype(complex)
    raise UnsupportedError(g.kind)


def apply_unitary_gate(psi: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply a measurement-free gate to a tensor of shape ``(2,)*n + batch``."""
    k = g.kind
    if k in ("CStringZ", "CCZ"):
        shape = psi.shape
        flat = psi.reshape((1 << n, -1))
        d = _diag_vector_cached(g, n)
        return (d[:, None] * flat).reshape(shape)
    if k == "AncRx":
        for (a, _), th in zip(g.strings, g.params):
            if g.control >= 0:
                c, s = math.cos(th / 2), math.sin(th / 2)
                m = c * np.eye(4) - 1j * s * np.kron(_MAT_X, _MAT_X)
                psi = _apply_small(psi, m, (a, g.control))
            else:
                psi = _apply_small(psi, gate_matrix(Rx(a, th)), (a,))
        return psi
    if k in MEASURE_KINDS or k == "ClassicallyControlled":
        raise UnsupportedError(f"{k} is not unitary")
    return _apply_small(psi, gate_matrix(g), g.wires)


@lru_cache(maxsize=4096)
def _diag_vector_cached(g: Gate, n: int) -> np.ndarray:
    v = _diag_vector(g, n)
    v.setflags(write=False)
    return v


def unitary(c: Circuit, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense unitary of a measurement-free circuit."""
    if c.has_measurements():
        raise UnsupportedError("circuit contains measurements")
    n = c.registers.n_wires
    if n > cap:
        raise OracleSizeError(f"{n} wires exceeds the oracle cap of {cap}")
    dim = 1 << n
    psi = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates():
        psi = apply_unitary_gate(psi, g, n)
    return psi.reshape(dim, dim)


# ---------------------------------------------------------------------------
# device model and metrics

CavityMode = Literal["flat", "sqrt_N", "sqrt_logN"]


@dataclass(frozen=True)
class DeviceModel:
    """Gate durations (ns) and pulse fidelities.

    Cavity string pulses last ``cavity_ns * f(N)`` with ``f`` = 1, sqrt(N) or
    sqrt(max(log2 N, 1)) by ``cavity_mode``; ``N`` is the string length.
    """

    local_ns: float = 40.0
    cavity_ns: float = 40.0
    measure_ns: float = 40.0
    cavity_mode: str = "sqrt_N"
    F: float = 0.999
    F_prime: float = 0.999
    overrides: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.cavity_mode not in ("flat", "sqrt_N", "sqrt_logN"):
            raise ValueError(f"unknown cavity mode {self.cavity_mode!r}")
        if min(self.local_ns, self.cavity_ns, self.measure_ns) <= 0:
            raise ValueError("durations must be positive")
        if not (0 < self.F <= 1 and 0 < self.F_prime <= 1):
            raise ValueError("fidelities must lie in (0, 1]")

    def cavity_factor(self, n: int) -> float:
        if self.cavity_mode == "flat":
            return 1.0
        if self.cavity_mode == "sqrt_N":
            return math.sqrt(max(n, 1))
        return math.sqrt(max(math.log2(max(n, 1)), 1.0))

    def duration(self, g: Gate) -> float:
        ov = dict(self.overrides)
        if g.kind in ov:
            return ov[g.kind]
        if g.kind == "ClassicallyControlled" and g.inner is not None:
            return self.duration(g.inner)
        if g.kind == "CStringZ":
            return self.cavity_ns * self.cavity_factor(g.string_length())
        if g.kind in ("AncRx", "CCZ"):
            return self.cavity_ns
        if g.kind == "Measure":
            return self.measure_ns
        if g.kind == "BellMeasure":
            return 2 * self.local_ns + self.measure_ns
        if g.kind == "BellPrep":
            return 2 * self.local_ns
        return self.local_ns


def pulse_counts(g: Gate) -> tuple[int, int]:
    """``(local, collective)`` control pulses of one gate."""
    if g.kind == "ClassicallyControlled" and g.inner is not None:
        return pulse_counts(g.inner)
    if g.kind in COLLECTIVE_KINDS:
        return 0, 1
    if g.kind in ("BellPrep", "BellMeasure"):
        return 2, 0
    if g.kind == "Measure":
        return 0, 0
    return 1, 0


@dataclass(frozen=True)
class Metrics:
    depth: int
    gate_counts: dict
    duration_ns: float
    local_pulses: int
    collective_pulses: int
    pulse_fidelity_estimate: float
    layer_durations_ns: tuple[float, ...] = ()

    def to_json(self) -> str:
        d = {
            "depth": self.depth,
            "gate_counts": dict(sorted(self.gate_counts.items())),
            "duration_ns": self.duration_ns,
            "local_pulses": self.local_pulses,
            "collective_pulses": self.collective_pulses,
            "pulse_fidelity_estimate": self.pulse_fidelity_estimate,
        }
        return json.dumps(d, sort_keys=True, indent=2)


def layer_durations(c: Circuit, d: DeviceModel) -> list[float]:
    return [max(d.duration(g) for g in layer) for layer in c.layers]


def metrics(c: Circuit, d: DeviceModel | None = None) -> Metrics:
    """Depth, gate counts, duration and pulse-fidelity estimate."""
    d = d or DeviceModel()
    counts: dict[str, int] = {}
    loc = col = 0
    for g in c.gates():
        counts[g.kind] = counts.get(g.kind, 0) + 1
        a, b = pulse_counts(g)
        loc += a
        col += b
    durs = layer_durations(c, d)
    return Metrics(
        depth=c.depth,
        gate_counts=counts,
        duration_ns=float(sum(durs)),
        local_pulses=loc,
        collective_pulses=col,
        pulse_fidelity_estimate=d.F**loc * d.F_prime**col,
        layer_durations_ns=tuple(durs),
    )
