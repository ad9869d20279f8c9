"""Compilation of Pauli exponentials to local and cavity-assisted circuits.

Sign convention: every term compiles to ``exp(-i dt coeff word)``; the
ancilla rotation angle is ``+2 coeff dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .circuits import (
    H,
    HS,
    AncRx,
    BellMeasure,
    BellPrep,
    CCZ,
    CNOT,
    Circuit,
    CircuitBuilder,
    CircuitError,
    ClassicallyControlled,
    CStringZ,
    DeviceModel,
    Gate,
    Measure,
    MultiAncRx,
    MultiCStringZ,
    Phase,
    Registers,
    Rx,
    Rz,
)
from .pauli_core import PauliSum, PauliTerm, PauliWord
from .scheduler import (
    CommutingGroup,
    ParallelPlan,
    partition_commuting,
    plan_group,
)

BackendKind = Literal["local", "cavity_series", "cavity_parallel"]


class NonHermitianTermError(ValueError):
    """Term with a complex coefficient cannot be exponentiated unitarily."""


@dataclass(frozen=True)
class Backend:
    """Compilation target.

    ``n_ancillae`` bounds parallel group size (larger groups are split).
    ``ancilla_for_term`` optionally assigns each term a cavity ancilla for the
    series backend. ``local_weight_max`` routes terms up to that weight to the
    local ladder even on cavity backends. ``reset_ancillae`` re-initialises
    every cavity ancilla (and the dummy) after each use by measurement and a
    classically controlled flip, and prepares it just before the next use, so
    idle ancillae sit in vacuum and a data error cannot leave a flipped
    ancilla behind for later terms. The control of a controlled evolution is
    never reset.
    """

    kind: BackendKind = "local"
    device: DeviceModel = field(default_factory=DeviceModel)
    n_ancillae: int | None = None
    ancilla_for_term: tuple[int, ...] | None = None
    local_weight_max: int = 0
    reset_ancillae: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("local", "cavity_series", "cavity_parallel"):
            raise ValueError(f"unknown backend {self.kind!r}")


@dataclass(frozen=True)
class TrotterSpec:
    dt: float
    n_steps: int = 1
    order: str = "first"
    grouping: tuple[CommutingGroup, ...] | None = None
    repack: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.order != "first":
            raise ValueError("only first-order Trotter is supported")


def _real_coeff(t: PauliTerm) -> float:
    if abs(t.coeff.imag) > 1e-12:
        raise NonHermitianTermError(f"term {t.word} has complex coefficient {t.coeff}")
    return float(t.coeff.real)


def _basis_in(letter: str, w: int) -> Gate | None:
    if letter == "X":
        return H(w)
    if letter == "Y":
        return HS(w)
    return None


def _basis_out(letter: str, w: int) -> Gate | None:
    if letter == "X":
        return H(w)
    if letter == "Y":
        return HS(w, dag=True)
    return None


def _term_local_layers(letters: Sequence[tuple[int, str]], angle: float) -> list[list[Gate]]:
    """Basis change, CNOT ladder onto the last wire, Rz, mirror."""
    if not letters:
        return []
    letters = sorted(letters)
    wires = [w for w, _ in letters]
    layers: list[list[Gate]] = []
    pre = [g for w, p in letters if (g := _basis_in(p, w)) is not None]
    post = [g for w, p in letters if (g := _basis_out(p, w)) is not None]
    if pre:
        layers.append(pre)
    ladder = [[CNOT(wires[i], wires[i + 1])] for i in range(len(wires) - 1)]
    layers += ladder
    layers.append([Rz(wires[-1], angle)])
    layers += ladder[::-1]
    if post:
        layers.append(post)
    return layers


def compile_term_local(
    t: PauliTerm,
    dt: float,
    registers: Registers | None = None,
    wires: Sequence[int] | None = None,
) -> Circuit:
    """CNOT-ladder circuit for ``exp(-i dt coeff word)`` (identity words emit nothing)."""
    c = _real_coeff(t)
    n = t.n_qubits
    registers = registers or Registers(n)
    wmap = list(wires) if wires is not None else list(range(n))
    letters = [(wmap[q], p) for q, p in enumerate(t.word.letters) if p != "I"]
    return Circuit(registers, tuple(tuple(l) for l in _term_local_layers(letters, 2 * c * dt)))


def _term_cavity_layers(
    letters: Sequence[tuple[int, str]], ancilla: int, angle: float, control: int | None = None
) -> list[list[Gate]]:
    if not letters:
        return [[AncRx(ancilla, angle, control)]]
    letters = sorted(letters)
    qs = [w for w, _ in letters]
    pre = [g for w, p in letters if (g := _basis_in(p, w)) is not None]
    post = [g for w, p in letters if (g := _basis_out(p, w)) is not None]
    layers: list[list[Gate]] = []
    if pre:
        layers.append(pre)
    layers.append([CStringZ(ancilla, qs)])
    layers.append([AncRx(ancilla, angle, control)])
    layers.append([CStringZ(ancilla, qs)])
    if post:
        layers.append(post)
    return layers


def compile_term_cavity(
    t: PauliTerm,
    dt: float,
    ancilla: int | None = None,
    registers: Registers | None = None,
    wires: Sequence[int] | None = None,
    prepare_ancilla: bool = False,
) -> Circuit:
    """Controlled-string circuit: basis, C-Zbar, AncRx(2 coeff dt), C-Zbar, basis.

    With the ancilla in ``|+>`` the data sees ``exp(-i dt coeff word)`` and the
    ancilla returns to ``|+>``. ``prepare_ancilla`` wraps the circuit in
    Hadamards so an ancilla starting in ``|0>`` ends in ``|0>``.
    """
    c = _real_coeff(t)
    n = t.n_qubits
    registers = registers or Registers(n, 1)
    anc = registers.cavity(0) if ancilla is None else ancilla
    wmap = list(wires) if wires is not None else list(range(n))
    letters = [(wmap[q], p) for q, p in enumerate(t.word.letters) if p != "I"]
    layers = _term_cavity_layers(letters, anc, 2 * c * dt)
    if prepare_ancilla:
        layers = [[H(anc)]] + layers + [[H(anc)]]
    return Circuit(registers, tuple(tuple(l) for l in layers))


def parallel_registers(n_data: int, n_ancillae: int, extra_cavities: int = 0) -> Registers:
    return Registers(n_data, n_ancillae + extra_cavities, has_dummy=True)


def _group_layers(
    h: PauliSum,
    plan: ParallelPlan,
    dt: float,
    anc_wires: Sequence[int],
    dummy: int,
    control: int | None,
    wmap: Sequence[int],
) -> list[list[Gate]]:
    terms = [h.terms[i] for i in plan.group.indices]
    coeffs = [_real_coeff(t) for t in terms]
    ancs = [anc_wires[plan.ancilla_assignment[r]] for r in range(len(terms))]

    def stage(kind: str) -> list[list[Gate]]:
        strings = []
        touched: list[int] = []
        for r, sp in enumerate(plan.splits):
            qs = [wmap[q] for q in sp.part(kind).support]
            if qs:
                strings.append((ancs[r], qs))
                touched += [q for q in qs if q not in touched]
        if not strings:
            return []
        body = [MultiCStringZ(strings)]
        if kind == "z":
            return [body]
        touched.sort()
        if kind == "x":
            return [[H(q) for q in touched], body, [H(q) for q in touched]]
        return [[HS(q) for q in touched], body, [HS(q, dag=True) for q in touched]]

    d_layers: list[list[Gate]] = []
    if plan.sign_pairs:
        sets = [(ancs[a], ancs[b]) for a, b in sorted(plan.sign_pairs)]
        d_layers.append([CCZ(sets, dummy)])
    if plan.global_flip:
        d_layers.append([Phase(dummy, math.pi)])

    collect = stage("z") + stage("y") + stage("x") + d_layers
    rot = [[MultiAncRx([(ancs[r], 2 * coeffs[r] * dt) for r in range(len(terms))], control)]]
    erase = d_layers + stage("x") + stage("y") + stage("z")
    return collect + rot + erase


def compile_group_parallel(
    h: PauliSum,
    plan: ParallelPlan,
    dt: float,
    registers: Registers | None = None,
    ancilla_wires: Sequence[int] | None = None,
    control: int | None = None,
    wires: Sequence[int] | None = None,
) -> Circuit:
    """Multi-ancilla circuit for a commuting group.

    Collect stage: conditional z-strings, then y-strings (HS sandwich), then
    x-strings (H sandwich), then the sign fix ``D`` as CCZ gates on the dummy.
    The ancilla rotations follow, then the mirrored erase stage. With every
    ancilla in ``|+>`` and the dummy in ``|1>`` the data sees the product of
    the term exponentials.
    """
    n = h.n_qubits
    registers = registers or parallel_registers(n, len(plan.group))
    anc = list(ancilla_wires) if ancilla_wires is not None else registers.cavity_wires()
    if len(anc) < len(plan.group):
        raise CircuitError("not enough ancilla wires for the plan")
    wmap = list(wires) if wires is not None else list(range(n))
    layers = _group_layers(h, plan, dt, anc, registers.dummy, control, wmap)
    return Circuit(registers, tuple(tuple(l) for l in layers))


# ---------------------------------------------------------------------------
# Trotter steps


def _chunks(group: CommutingGroup, size: int) -> list[CommutingGroup]:
    idx = group.indices
    return [CommutingGroup(idx[i : i + size]) for i in range(0, len(idx), size)]


def trotter_term_order(h: PauliSum, groups: Sequence[CommutingGroup]) -> list[int]:
    return [i for g in groups for i in g.indices]


@dataclass(frozen=True)
class _Layout:
    registers: Registers
    control: int | None
    anc_wires: tuple[int, ...]
    dummy: int | None


def _layout(
    h: PauliSum, b: Backend, groups: Sequence[CommutingGroup], controlled: bool, reserve: int = 0
) -> _Layout:
    """Wire layout. ``reserve`` leading cavity wires are left to the caller;
    in controlled mode the first reserved wire is the control."""
    n = h.n_qubits
    if controlled:
        reserve = max(reserve, 1)
    if b.kind == "local":
        reg = Registers(n, reserve)
        return _Layout(reg, n if controlled else None, (), None)
    if b.kind == "cavity_series":
        if controlled:
            reg = Registers(n, reserve)
            return _Layout(reg, n, (n,), None)
        n_anc = 1 if b.ancilla_for_term is None else max(b.ancilla_for_term) + 1
        reg = Registers(n, reserve + n_anc)
        return _Layout(reg, None, tuple(reg.cavity_wires()[reserve:]), None)
    size = b.n_ancillae or max((len(g) for g in groups), default=1)
    reg = Registers(n, size + reserve, has_dummy=True)
    cav = reg.cavity_wires()
    control = cav[0] if controlled else None
    return _Layout(reg, control, tuple(cav[reserve:]), reg.dummy)


def _step_gates(
    h: PauliSum,
    b: Backend,
    groups: Sequence[CommutingGroup],
    dt: float,
    lay: _Layout,
    tag: str = "",
) -> list[list[Gate]]:
    """Layers for one Trotter step; ``tag`` keeps reset keys unique per step."""
    layers: list[list[Gate]] = []
    n_reset = 0

    def fresh(wires: Sequence[int]) -> None:
        if b.reset_ancillae:
            layers.append([H(w) if w != lay.dummy else Rx(w, math.pi) for w in wires])

    def reset(wires: Sequence[int]) -> None:
        nonlocal n_reset
        if not b.reset_ancillae:
            return
        keys = [f"rst{tag}_{n_reset}_{w}" for w in wires]
        n_reset += 1
        layers.append([H(w) if w != lay.dummy else Rx(w, math.pi) for w in wires])
        layers.append([Measure(w, k) for w, k in zip(wires, keys)])
        layers.append([ClassicallyControlled(Rx(w, math.pi), [k]) for w, k in zip(wires, keys)])

    n = h.n_qubits
    for g in groups:
        if b.kind == "cavity_parallel":
            big = [i for i in g.indices if h.terms[i].word.support and len(h.terms[i].word.support) > b.local_weight_max]
            small = [i for i in g.indices if i not in big]
        else:
            big, small = [], list(g.indices)
        for i in small:
            t = h.terms[i]
            c = _real_coeff(t)
            letters = [(q, p) for q, p in enumerate(t.word.letters) if p != "I"]
            use_local = b.kind == "local" or (letters and len(letters) <= b.local_weight_max)
            if use_local:
                if lay.control is not None:
                    letters = letters + [(lay.control, "X")]
                layers += _term_local_layers(letters, 2 * c * dt)
            else:
                if lay.control is not None and b.kind == "cavity_series":
                    anc, ctrl = lay.control, None
                elif lay.control is not None:
                    # parallel backend: singleton routed through a plan ancilla
                    anc, ctrl = lay.anc_wires[0], lay.control
                else:
                    k = 0 if b.ancilla_for_term is None else b.ancilla_for_term[i]
                    anc, ctrl = lay.anc_wires[k], None
                own = anc != lay.control
                if own:
                    fresh([anc])
                layers += _term_cavity_layers(letters, anc, 2 * c * dt, ctrl)
                if own:
                    reset([anc])
        if big:
            size = len(lay.anc_wires)
            for chunk in _chunks(CommutingGroup(tuple(big)), size):
                plan = plan_group(h, chunk, size)
                used = [lay.anc_wires[k] for k in range(len(chunk))]
                used += [lay.dummy] if lay.dummy is not None else []
                fresh(used)
                layers += _group_layers(h, plan, dt, lay.anc_wires, lay.dummy, lay.control, list(range(n)))
                reset(used)
    return layers


def _steps(h: PauliSum, b: Backend, groups: Sequence[CommutingGroup], dt: float, lay: _Layout, n: int) -> list[list[list[Gate]]]:
    """Per-step layer lists (distinct measurement keys when resetting)."""
    if not b.reset_ancillae:
        one = _step_gates(h, b, groups, dt, lay)
        return [one] * n
    return [_step_gates(h, b, groups, dt, lay, f"s{k}") for k in range(n)]


def _groups_for(h: PauliSum, spec: TrotterSpec) -> list[CommutingGroup]:
    if spec.grouping is not None:
        return list(spec.grouping)
    return partition_commuting(h)


def _prep_layers(lay: _Layout, b: Backend, controlled: bool) -> tuple[list[list[Gate]], list[list[Gate]]]:
    """Ancilla preparation: plan/series ancillae to |+>, dummy to |1>."""
    pre: list[Gate] = []
    post: list[Gate] = []
    if b.reset_ancillae:
        return [], []
    for w in lay.anc_wires:
        if controlled and b.kind == "cavity_series":
            continue
        pre.append(H(w))
        post.append(H(w))
    if lay.dummy is not None:
        pre.append(Rx(lay.dummy, math.pi))
        post.append(Rx(lay.dummy, -math.pi))
    return ([pre] if pre else []), ([post] if post else [])


def _assemble(layers: list[list[Gate]], reg: Registers, repack: bool) -> Circuit:
    b = CircuitBuilder(reg)
    for l in layers:
        if repack:
            for g in l:
                b.pack(g)
        else:
            b.layer(l)
    return b.build()


def compile_trotter(h: PauliSum, spec: TrotterSpec, b: Backend, prepare_ancillae: bool = True) -> Circuit:
    """First-order Trotter circuit, ``spec.n_steps`` repetitions of one step.

    Terms are ordered by group (scheduler order) then by index within the
    group, identically for every backend. Cavity ancillae are prepared in
    ``|+>`` and the dummy in ``|1>`` at the start and undone at the end when
    ``prepare_ancillae`` is set.
    """
    groups = _groups_for(h, spec)
    if b.kind != "cavity_parallel":
        order = trotter_term_order(h, groups)
        groups = [CommutingGroup(tuple(order))]
    lay = _layout(h, b, groups if b.kind == "cavity_parallel" else _groups_for(h, spec), False)
    steps = _steps(h, b, groups, spec.dt, lay, spec.n_steps)
    pre, post = _prep_layers(lay, b, False) if prepare_ancillae else ([], [])
    return _assemble(pre + [l for st in steps for l in st] + post, lay.registers, spec.repack)


def compile_trotter_step(h: PauliSum, spec: TrotterSpec, b: Backend) -> Circuit:
    """A single step without ancilla preparation (for counting)."""
    one = TrotterSpec(spec.dt, 1, spec.order, spec.grouping, spec.repack)
    return compile_trotter(h, one, b, prepare_ancillae=False)


def compile_controlled_evolution(
    h: PauliSum,
    t_total: float,
    spec: TrotterSpec,
    b: Backend,
    control: int | None = None,
    prepare_ancillae: bool = True,
) -> Circuit:
    """``exp(-iHt) |+><+| + exp(+iHt) |-><-|`` on the control, up to Trotter error.

    The control is cavity ancilla 0. The local backend extends every ladder to
    the control (basis X), the series backend uses the control as the string
    ancilla, and the parallel backend conditions every ancilla rotation on it.
    ``control`` may name a different wire index inside the same registers.
    """
    groups = _groups_for(h, spec)
    if b.kind != "cavity_parallel":
        groups = [CommutingGroup(tuple(trotter_term_order(h, groups)))]
    n_steps = max(1, int(round(t_total / spec.dt))) if t_total > 0 else 0
    lay = _layout(h, b, groups, True)
    if control is not None and control != lay.control:
        raise CircuitError("control must be cavity ancilla 0 of the controlled layout")
    if n_steps == 0:
        return Circuit(lay.registers, ())
    dt = t_total / n_steps
    steps = _steps(h, b, groups, dt, lay, n_steps)
    pre, post = _prep_layers(lay, b, True) if prepare_ancillae else ([], [])
    return _assemble(pre + [l for st in steps for l in st] + post, lay.registers, spec.repack)


def controlled_step(h: PauliSum, dt: float, b: Backend, grouping: Sequence[CommutingGroup] | None = None) -> Circuit:
    """One controlled Trotter step, ancillae prepared and restored."""
    spec = TrotterSpec(dt, 1, grouping=tuple(grouping) if grouping is not None else None)
    return compile_controlled_evolution(h, dt, spec, b)


@dataclass(frozen=True)
class EvolutionPass:
    """Multi-step circuit with the layer index closing every Trotter step.

    ``step_ends[k]`` is the last layer of step ``k + 1``; the head layers (if
    any) end at ``head_end`` (``-1`` when empty).
    """

    circuit: Circuit
    step_ends: tuple[int, ...]
    head_end: int
    control: int | None
    ancilla_wires: tuple[int, ...]
    dummy: int | None


def evolution_pass(
    h: PauliSum,
    dt: float,
    n_steps: int,
    b: Backend,
    grouping: Sequence[CommutingGroup] | None = None,
    controlled: bool = False,
    reserve: int = 0,
    head: Sequence[Sequence[Gate]] = (),
) -> EvolutionPass:
    """Ancilla preparation, optional head layers, then ``n_steps`` Trotter steps.

    Used by the time-series protocols: observables are read after each step
    without recompiling. ``reserve`` leading cavity wires stay free for the
    caller (the control in controlled mode is the first of them).
    """
    spec = TrotterSpec(dt, max(n_steps, 1), grouping=tuple(grouping) if grouping is not None else None)
    groups = _groups_for(h, spec)
    if b.kind != "cavity_parallel":
        groups = [CommutingGroup(tuple(trotter_term_order(h, groups)))]
    lay = _layout(h, b, groups, controlled, reserve)
    pre, _ = _prep_layers(lay, b, controlled)
    layers = pre + [list(l) for l in head]
    head_end = len(layers) - 1
    ends = []
    for step in _steps(h, b, groups, dt, lay, n_steps):
        layers += step
        ends.append(len(layers) - 1)
    c = Circuit(lay.registers, tuple(tuple(l) for l in layers))
    return EvolutionPass(c, tuple(ends), head_end, lay.control, lay.anc_wires, lay.dummy)


# ---------------------------------------------------------------------------
# modular stitching


def _fanout_stage(
    reg: Registers, modules: Sequence[Sequence[int]], tag: str
) -> list[list[Gate]]:
    """Copy the target cavity's Z value into every module and apply the strings.

    The target is the last module. Bell pair ``k`` joins module ``k`` (wire
    ``v_k``) and module ``k+1`` (wire ``w_k``). Parity checks fuse the pairs
    into a GHZ copy, Pauli-frame corrections fix it, local CNOTs copy it into
    each cavity, and every module applies its own controlled string. Bell
    measurements then erase the copies.
    """
    m = len(modules)
    tgt = reg.cavity(m - 1)
    pairs = [reg.bell(k) for k in range(m - 1)]
    layers: list[list[Gate]] = []
    layers.append([BellPrep(v, w) for v, w in pairs])
    fuse = [CNOT(tgt, pairs[m - 2][1])]
    for k in range(1, m - 1):
        fuse.append(CNOT(pairs[k][0], pairs[k - 1][1]))
    layers.append(fuse)
    keys = [f"{tag}_f{k}" for k in range(m - 1)]
    layers.append([Measure(pairs[k][1], keys[k]) for k in range(m - 1)])
    corr = []
    for k in range(m - 1):
        corr.append(ClassicallyControlled(Rx(pairs[k][0], math.pi), keys[k:]))
        corr.append(ClassicallyControlled(Rx(pairs[k][1], math.pi), [keys[k]]))
    layers.append(corr)
    layers.append([CNOT(pairs[k][0], reg.cavity(k)) for k in range(m - 1)])
    layers.append([CStringZ(reg.cavity(k), list(modules[k])) for k in range(m)])
    rkeys = [f"{tag}_r{k}" for k in range(m - 1)]
    zkeys = [f"{tag}_z{k}" for k in range(m - 1)]
    layers.append([BellMeasure(pairs[k][0], reg.cavity(k), rkeys[k], zkeys[k]) for k in range(m - 1)])
    fix = [ClassicallyControlled(Phase(tgt, math.pi), rkeys)]
    for k in range(m - 1):
        fix.append(ClassicallyControlled(Rx(pairs[k][0], math.pi), [rkeys[k]]))
        fix.append(ClassicallyControlled(Rx(reg.cavity(k), math.pi), [zkeys[k]]))
    layers.append(fix)
    return layers


def compile_teleported_string(
    module_partition: Sequence[Sequence[int]],
    dt: float,
    coeff: float = 1.0,
    n_data: int | None = None,
) -> Circuit:
    """Stitched ``exp(-i dt coeff Zbar)`` over several modules.

    All ancilla wires start and end in ``|0>``; each measurement branch
    applies the target exponential to the data.
    """
    modules = [list(m) for m in module_partition]
    if not modules or any(len(m) == 0 for m in modules):
        raise ValueError("every module needs at least one qubit")
    flat = [q for m in modules for q in m]
    if len(set(flat)) != len(flat):
        raise ValueError("modules must be disjoint")
    n = n_data if n_data is not None else max(flat) + 1
    if len(modules) == 1:
        reg = Registers(n, 1)
        word = PauliWord.from_sparse(n, {q: "Z" for q in modules[0]})
        return compile_term_cavity(PauliTerm(coeff, word), dt, registers=reg, prepare_ancilla=True)
    m = len(modules)
    reg = Registers(n, m, False, m - 1)
    tgt = reg.cavity(m - 1)
    layers: list[list[Gate]] = [[H(tgt)]]
    layers += _fanout_stage(reg, modules, "a")
    layers.append([AncRx(tgt, 2 * coeff * dt)])
    layers += _fanout_stage(reg, modules, "b")
    layers.append([H(tgt)])
    return Circuit(reg, tuple(tuple(l) for l in layers))


# ---------------------------------------------------------------------------
# oracles


def data_block(u: np.ndarray, registers: Registers, ancilla_state: np.ndarray) -> np.ndarray:
    """``<a| U |a>`` restricted to the data register."""
    dd = 1 << registers.n_data
    da = u.shape[0] // dd
    a = np.asarray(ancilla_state, dtype=complex).reshape(da)
    u4 = u.reshape(dd, da, dd, da)
    return np.einsum("iajb,a,b->ij", u4, a.conj(), a)


def data_operator(c: Circuit, ancilla_state: np.ndarray | None = None, cap: int = 22) -> np.ndarray:
    """``<a| U |a>`` on the data register, propagating only ``2^n_data`` columns.

    Cheaper than :func:`data_block` of the full unitary when ancillae are many.
    The default ancilla state is all ``|0>``.
    """
    from .circuits import apply_unitary_gate
    from .pauli_core import OracleSizeError

    reg = c.registers
    n = reg.n_wires
    if n > cap:
        raise OracleSizeError(f"{n} wires exceeds the oracle cap of {cap}")
    dd = 1 << reg.n_data
    da = 1 << (n - reg.n_data)
    a = np.zeros(da, dtype=complex) if ancilla_state is None else np.asarray(ancilla_state, dtype=complex)
    if ancilla_state is None:
        a[0] = 1
    psi = np.einsum("ij,a->iaj", np.eye(dd, dtype=complex), a).reshape((2,) * n + (dd,))
    for g in c.gates():
        psi = apply_unitary_gate(psi, g, n)
    out = psi.reshape(dd, da, dd)
    return np.einsum("iaj,a->ij", out, a.conj())


def ancilla_product_state(registers: Registers, plus_cavities: bool = True) -> np.ndarray:
    """Cavities in ``|+>``, dummy in ``|1>``, Bell wires in ``|0>``."""
    plus = np.array([1, 1]) / math.sqrt(2)
    one = np.array([0, 1.0])
    zero = np.array([1, 0.0])
    vec = np.array([1.0 + 0j])
    for _ in range(registers.n_cavity):
        vec = np.kron(vec, plus if plus_cavities else zero)
    if registers.has_dummy:
        vec = np.kron(vec, one)
    for _ in range(2 * registers.n_bell_pairs):
        vec = np.kron(vec, zero)
    return vec


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry distance between ``a`` and ``b`` minimized over a global phase."""
    ov = np.vdot(b, a)
    ph = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return float(np.abs(a - ph * b).max())


def term_exponential(t: PauliTerm, dt: float) -> np.ndarray:
    """Dense ``exp(-i dt coeff word)`` using ``P^2 = I``."""
    from .pauli_core import to_matrix

    c = _real_coeff(t)
    p = to_matrix(t.word)
    return math.cos(c * dt) * np.eye(p.shape[0]) - 1j * math.sin(c * dt) * p


# ---------------------------------------------------------------------------
# depth scans


@dataclass(frozen=True)
class DepthRow:
    N: int
    backend: str
    n_qubits: int
    n_terms: int
    n_groups: int
    depth: int
    duration_ns: float
    local_pulses: int
    collective_pulses: int
    pulse_fidelity_estimate: float


def hubbard_step_circuit(N: int, kind: str, device: DeviceModel | None = None, encoding: str = "JW") -> tuple[Circuit, int, int]:
    """One repacked Trotter step of the N x N Hubbard model.

    Terms are grouped by lattice class (onsite, horizontal, vertical even and
    odd rows). The series backend gives each row its own cavity ancilla.
    Returns the circuit, the term count and the group count.
    """
    from .models import TERM_LABELS, HubbardSpec, encode_hubbard
    from .scheduler import partition_by_labels

    lab = encode_hubbard(HubbardSpec(N, N, 1.0, 1.0), encoding)
    h = lab.hamiltonian
    groups = tuple(partition_by_labels(h, lab.labels, TERM_LABELS))
    spec = TrotterSpec(0.1, 1, grouping=groups, repack=True)
    device = device or DeviceModel()
    if kind == "cavity_series":
        b = Backend(kind, device, ancilla_for_term=tuple(lab.rows))
    else:
        b = Backend(kind, device)
    return compile_trotter_step(h, spec, b), len(h.terms), len(groups)


def hubbard_depth_scan(
    Ns: Sequence[int],
    kinds: Sequence[str] = ("local", "cavity_series", "cavity_parallel"),
    device: DeviceModel | None = None,
    encoding: str = "JW",
) -> list[DepthRow]:
    from .circuits import metrics

    device = device or DeviceModel()
    rows = []
    for N in Ns:
        for kind in kinds:
            c, nt, ng = hubbard_step_circuit(N, kind, device, encoding)
            m = metrics(c, device)
            rows.append(
                DepthRow(N, kind, c.registers.n_data, nt, ng, m.depth, m.duration_ns, m.local_pulses,
                         m.collective_pulses, m.pulse_fidelity_estimate)
            )
    return rows


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])
