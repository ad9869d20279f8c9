"""Fluxonium phase matrix elements and dispersive shifts across E_J."""

from __future__ import annotations

from fermicav.device_physics import FluxoniumParams, diagonalize, dispersive_report, selection_ratio


def main() -> None:
    for ej in (4.0, 8.0, 12.0, 16.0, 20.0):
        s = diagonalize(FluxoniumParams(0.5, ej, 0.75, 0.4))
        rep = dispersive_report(s, 0.1, 7.0)
        print(
            f"E_J {ej:4.0f}  f01 {s.transitions()[1]:.4f} GHz  |phi01|/|phi02| {selection_ratio(s):.2e}"
            f"  chi {rep.chi_qnd:+.2e}  mu01 {rep.flip_flop[0, 1]:+.2e}"
        )


if __name__ == "__main__":
    main()
