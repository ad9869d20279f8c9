"""Per-Trotter-step depth of the N x N Hubbard model on the three backends."""

from __future__ import annotations

from fermicav.backends import fit_exponent, hubbard_depth_scan


def main() -> None:
    Ns = list(range(2, 7))
    rows = hubbard_depth_scan(Ns)
    print(f"{'N':>2} {'backend':<16} {'depth':>6} {'ns':>10} {'fidelity':>9}")
    for r in rows:
        print(f"{r.N:>2} {r.backend:<16} {r.depth:>6} {r.duration_ns:>10.0f} {r.pulse_fidelity_estimate:>9.4f}")
    for kind in ("local", "cavity_series", "cavity_parallel"):
        d = [r.depth for r in rows if r.backend == kind]
        print(f"{kind}: depth exponent {fit_exponent(Ns, d):.2f}")


if __name__ == "__main__":
    main()
