"""Encode the 2x2 Hubbard model and show its commuting groups and parallel plans."""

from __future__ import annotations

from fermicav.models import TERM_LABELS, HubbardSpec, encode_hubbard, stats
from fermicav.scheduler import partition_by_labels, plan_group


def main() -> None:
    lab = encode_hubbard(HubbardSpec(2, 2, 0.1, 1.0), "JW")
    h = lab.hamiltonian
    s = stats(h)
    print(f"{h.n_qubits} qubits, {s.n_terms} terms, {s.n_groups} greedy groups, mean weight {s.mean_weight:.2f}")
    for g in partition_by_labels(h, lab.labels, TERM_LABELS):
        plan = plan_group(h, g, len(g))
        words = " ".join(h.terms[i].word.letters for i in g.indices)
        print(f"group of {len(g)}: sign pairs {sorted(plan.sign_pairs)}  {words}")


if __name__ == "__main__":
    main()
