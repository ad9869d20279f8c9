"""Local spectral function of the 2x2 Hubbard model; the two peaks sit about U apart."""

from __future__ import annotations

import numpy as np

from fermicav.fermion_encoding import Encoding, number_operator
from fermicav.models import HubbardSpec, build_hubbard, encode_hubbard
from fermicav.protocols import dynamical_correlator, spectral_function, spectral_peaks
from fermicav.simulator import sector_ground_state


def main() -> None:
    spec = HubbardSpec(2, 2, 0.1, 1.0)
    h = encode_hubbard(spec).hamiltonian
    _, order, _ = build_hubbard(spec)
    enc = Encoding("JW", order)
    _, psi = sector_ground_state(h, number_operator(range(8), enc), 4)
    corr = dynamical_correlator(h, psi, 0, 0, 0.5, 100, enc)
    om = np.linspace(-2, 2, 801)
    a = spectral_function(corr, om)
    for p in sorted(spectral_peaks(om, a), key=lambda p: p.omega):
        print(f"peak at {p.omega:+.3f}  height {p.height:.2f}")


if __name__ == "__main__":
    main()
