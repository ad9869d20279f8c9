"""Commuting-group partitioning, x/y/z splitting and sign-fix planning."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli_core import PauliSum, PauliWord, commutation_matrix, commutes

EXHAUSTIVE_CAP = 12
STRATEGIES = ("greedy_largest_degree_first", "exhaustive")


class GroupingSizeError(ValueError):
    """Exhaustive grouping requested above its size cap."""


class InsufficientAncillaeError(ValueError):
    """Fewer ancillae than terms in a parallel group."""


@dataclass(frozen=True)
class CommutingGroup:
    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class XYZSplit:
    sx: PauliWord
    sy: PauliWord
    sz: PauliWord

    def part(self, kind: str) -> PauliWord:
        return {"x": self.sx, "y": self.sy, "z": self.sz}[kind]


@dataclass(frozen=True)
class ParallelPlan:
    group: CommutingGroup
    splits: tuple[XYZSplit, ...]
    ancilla_assignment: tuple[int, ...]
    sign_pairs: frozenset[tuple[int, int]]
    global_flip: bool = False

    def report(self, group_id: int = 0) -> str:
        """Line-based text serialization."""
        pairs = " ".join(f"{a},{b}" for a, b in sorted(self.sign_pairs)) or "-"
        return "\n".join(
            [
                f"group {group_id}",
                "terms " + " ".join(str(i) for i in self.group.indices),
                "ancillae " + " ".join(str(a) for a in self.ancilla_assignment),
                f"sign_pairs {pairs}",
                f"flip {int(self.global_flip)}",
            ]
        )


def _validate(h: PauliSum, groups: Sequence[CommutingGroup]) -> None:
    seen = sorted(i for g in groups for i in g.indices)
    if seen != list(range(len(h.terms))):
        raise AssertionError("groups do not cover every term exactly once")


def _greedy(cm: np.ndarray, order: Sequence[int]) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in order:
        for g in groups:
            if all(cm[i, j] for j in g):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _exhaustive(cm: np.ndarray) -> list[list[int]]:
    n = cm.shape[0]
    best = _greedy(cm, range(n))
    order = list(range(n))

    def search(k: int, groups: list[list[int]]) -> None:
        nonlocal best
        if len(groups) >= len(best):
            return
        if k == n:
            best = [list(g) for g in groups]
            return
        i = order[k]
        for g in groups:
            if all(cm[i, j] for j in g):
                g.append(i)
                search(k + 1, groups)
                g.pop()
        groups.append([i])
        search(k + 1, groups)
        groups.pop()

    search(0, [])
    return best


def partition_commuting(h: PauliSum, strategy: str = "greedy_largest_degree_first") -> list[CommutingGroup]:
    """Partition terms into mutually commuting groups.

    ``greedy_largest_degree_first`` sorts terms by anticommutation degree
    (descending, ties by index) and places each in the first compatible group.
    ``exhaustive`` returns a minimum-cardinality cover for up to 12 terms.
    """
    n = len(h.terms)
    if n == 0:
        return []
    cm = commutation_matrix(h.words())
    if strategy in ("greedy", "greedy_largest_degree_first"):
        degree = (~cm).sum(axis=1)
        order = sorted(range(n), key=lambda i: (-degree[i], i))
        raw = _greedy(cm, order)
    elif strategy == "exhaustive":
        if n > EXHAUSTIVE_CAP:
            raise GroupingSizeError(f"exhaustive grouping is capped at {EXHAUSTIVE_CAP} terms, got {n}")
        raw = _exhaustive(cm)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    groups = [CommutingGroup(tuple(sorted(g))) for g in raw]
    groups.sort(key=lambda g: g.indices[0])
    _validate(h, groups)
    return groups


def partition_by_labels(h: PauliSum, labels: Sequence[str], label_order: Sequence[str]) -> list[CommutingGroup]:
    """Greedy grouping restricted to terms sharing a label, labels in order."""
    out: list[CommutingGroup] = []
    for lab in label_order:
        idx = [i for i, l in enumerate(labels) if l == lab]
        if not idx:
            continue
        sub = PauliSum(h.n_qubits, tuple(h.terms[i] for i in idx))
        for g in partition_commuting(sub):
            out.append(CommutingGroup(tuple(idx[j] for j in g.indices)))
    _validate(h, out)
    return out


def is_valid_group(h: PauliSum, group: CommutingGroup) -> bool:
    ws = [h.terms[i].word for i in group.indices]
    return all(commutes(a, b) for a, b in itertools.combinations(ws, 2))


def split_xyz(w: PauliWord) -> XYZSplit:
    """Split a word into its X-only, Y-only and Z-only letters."""

    def keep(c: str) -> PauliWord:
        return PauliWord("".join(p if p == c else "I" for p in w.letters))

    return XYZSplit(keep("X"), keep("Y"), keep("Z"))


def tau(a: PauliWord, b: PauliWord) -> int:
    """+1 if the words commute, -1 if they anticommute."""
    return 1 if commutes(a, b) else -1


def pair_sign(left: XYZSplit, right: XYZSplit) -> int:
    """Sign from regrouping ``(LxLyLz)(RxRyRz)`` into ``(LxRx)(LyRy)(LzRz)``.

    ``Rx`` moves left past ``Lz`` and ``Ly``; ``Lz`` then moves right past ``Ry``.
    """
    return tau(right.sx, left.sy) * tau(right.sx, left.sz) * tau(left.sz, right.sy)


def plan_group(
    h: PauliSum,
    group: CommutingGroup,
    ancillae: int,
    allow_flip: bool = False,
) -> ParallelPlan:
    """Build the parallel plan of a commuting group.

    Sign pairs use 0-based ranks within the group. With ``allow_flip`` the
    pair set is complemented when it exceeds ``n(n-1)/4`` pairs and the flip
    bit is set. The complemented set differs from the true sign pattern by
    ``(-1)^(k(k-1)/2 + 1)`` for ``k`` excited ancillae, which is not a global
    phase, so compiled circuits are exact only without the flip.
    """
    n = len(group)
    if ancillae < n:
        raise InsufficientAncillaeError(f"group of {n} terms needs {n} ancillae, got {ancillae}")
    if not is_valid_group(h, group):
        raise ValueError("group contains anticommuting terms")
    splits = tuple(split_xyz(h.terms[i].word) for i in group.indices)
    pairs = set()
    for mu, nu in itertools.combinations(range(n), 2):
        if pair_sign(splits[mu], splits[nu]) == -1:
            pairs.add((mu, nu))
    flip = False
    if allow_flip and len(pairs) > n * (n - 1) / 4:
        allp = set(itertools.combinations(range(n), 2))
        pairs = allp - pairs
        flip = True
    return ParallelPlan(group, splits, tuple(range(n)), frozenset(pairs), flip)


def plan_sign(plan: ParallelPlan, config: Sequence[int]) -> int:
    """Sign produced by the plan's diagonal operator for an ancilla configuration."""
    s = -1 if plan.global_flip else 1
    for a, b in plan.sign_pairs:
        if config[a] and config[b]:
            s = -s
    return s


def reorder_sign(plan: ParallelPlan, config: Sequence[int]) -> int:
    """Sign from symbolically regrouping the active x/y/z strings."""
    from .pauli_core import multiply

    n = plan.splits[0].sx.n_qubits
    active = [i for i, c in enumerate(config) if c]
    ident = PauliWord.identity(n)

    def product(words: Sequence[PauliWord]) -> tuple[complex, PauliWord]:
        ph: complex = 1
        w = ident
        for x in words:
            p, w = multiply(w, x)
            ph *= p
        return ph, w

    seq = []
    for i in active:
        s = plan.splits[i]
        seq += [s.sx, s.sy, s.sz]
    p1, w1 = product(seq)
    grouped = [plan.splits[i].sx for i in active] + [plan.splits[i].sy for i in active] + [
        plan.splits[i].sz for i in active
    ]
    p2, w2 = product(grouped)
    assert w1 == w2
    ratio = p1 / p2
    return int(round(ratio.real))
