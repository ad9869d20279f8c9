from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from fermicav.backends import Backend, TrotterSpec, compile_trotter
from fermicav.circuits import Circuit, H, Measure, Registers, Rx, Rz
from fermicav.pauli_core import PauliSum, to_matrix
from fermicav.simulator import (
    NoiseModel,
    NoiseScheduleWarning,
    NonHermitianError,
    State,
    TrajectoryConfig,
    WireMismatchError,
    exact_diagonalize,
    exact_evolve,
    expectation,
    run,
    run_trajectories,
    sector_ground_state,
    x_observable,
)

from conftest import dense_expm_herm

IDLE_LAYERS = 10  # 10 x 40 ns
T_NS = 400.0


def idle_circuit(reg: Registers, head=()) -> Circuit:
    layers = [tuple(head)] if head else []
    layers += [(Rz(0, 0.0),)] * IDLE_LAYERS
    return Circuit(reg, tuple(layers))


def z_mean(res):
    return res.mean[-1, 0], res.stderr[-1, 0]


def test_run_matches_exact_evolution():
    h = PauliSum.from_dict(2, {"XX": 0.3, "ZI": 0.7, "IY": -0.2})
    psi = np.array([1, 0, 0, 0], dtype=complex)
    want = dense_expm_herm(to_matrix(h), 1.3) @ psi
    got = exact_evolve(h, 1.3, psi).amplitudes
    assert np.allclose(got, want)


def test_exact_diagonalize_rejects_complex():
    with pytest.raises(NonHermitianError):
        exact_diagonalize(PauliSum.from_dict(1, {"X": 1j}))


def test_sector_ground_state_particle_number():
    n_op = PauliSum.from_dict(2, {"II": 1.0, "ZI": -0.5, "IZ": -0.5})
    h = PauliSum.from_dict(2, {"ZI": 1.0, "IZ": 2.0})
    e, v = sector_ground_state(h, n_op, 1)
    # one particle: |10> (energy -1 + 2) or |01> (1 - 2); the latter wins
    assert e == pytest.approx(-1.0)
    assert abs(v[1]) == pytest.approx(1.0)


def test_measurement_branches_probabilities():
    c = Circuit(Registers(1), ((Rx(0, math.pi / 3),), (Measure(0, "m"),)))
    br = run(c)
    p = {b.outcomes["m"]: b.probability for b in br}
    assert p[1] == pytest.approx(math.sin(math.pi / 6) ** 2)
    assert sum(p.values()) == pytest.approx(1.0)


def test_wire_mismatch():
    with pytest.raises(WireMismatchError):
        run(Circuit(Registers(2), ()), State.zero(3))


def test_sigma_minus_amplitude_damping():
    # sigma- acts on |0> (empty) and fills it; <Z> = 2 exp(-G T) - 1
    g = 1.0 / T_NS
    c = idle_circuit(Registers(1))
    res = run_trajectories(c, State.zero(1), NoiseModel(qubit_sigma_minus=g), TrajectoryConfig(2000, 11), {"z": 0})
    m, se = z_mean(res)
    assert abs(m - (2 * math.exp(-1.0) - 1)) < 4 * se + 1e-3


def test_sigma_minus_leaves_occupied_state():
    c = idle_circuit(Registers(1), head=[Rx(0, math.pi)])
    res = run_trajectories(c, State.zero(1), NoiseModel(qubit_sigma_minus=0.01), TrajectoryConfig(50, 0), {"z": 0})
    assert np.allclose(res.mean[:, 0], -1.0)


def test_dephasing_decay():
    g = 0.5 / T_NS
    c = idle_circuit(Registers(1), head=[H(0)])
    res = run_trajectories(c, State.zero(1), NoiseModel(qubit_dephasing=g), TrajectoryConfig(2000, 5),
                           {"x": x_observable(0, 1)})
    # the Hadamard layer also idles for 40 ns
    m, se = z_mean(res)
    assert abs(m - math.exp(-2 * g * (T_NS + 40))) < 4 * se + 1e-3


def test_cavity_decay_empties_cavity():
    k = 1.0 / T_NS
    reg = Registers(1, 1)
    c = idle_circuit(reg)
    res = run_trajectories(c, State.basis(2, 1), NoiseModel(cavity_decay=k), TrajectoryConfig(2000, 3), {"zc": 1})
    m, se = z_mean(res)
    assert abs(m - (1 - 2 * math.exp(-1.0))) < 4 * se + 1e-3


def test_zero_noise_equals_run():
    h = PauliSum.from_dict(3, {"XXI": 0.5, "IYY": -0.3, "ZIZ": 0.8})
    c = compile_trotter(h, TrotterSpec(0.2, 3), Backend("cavity_series"))
    init = State.product(np.eye(8)[3], [0])
    res = run_trajectories(c, init, NoiseModel(), TrajectoryConfig(5, 0), {"z0": 0, "z2": 2}, record_layers=[c.depth - 1])
    final = run(c, init)
    assert res.mean[0, 0] == pytest.approx(expectation(final, 0))
    assert res.mean[0, 1] == pytest.approx(expectation(final, 2))
    assert np.all(res.stderr == 0)


def test_seeded_reproducible():
    c = idle_circuit(Registers(1), head=[H(0)])
    noise = NoiseModel(qubit_dephasing=0.002, qubit_sigma_minus=0.001)
    a = run_trajectories(c, State.zero(1), noise, TrajectoryConfig(30, 9), {"z": 0})
    b = run_trajectories(c, State.zero(1), noise, TrajectoryConfig(30, 9), {"z": 0})
    d = run_trajectories(c, State.zero(1), noise, TrajectoryConfig(30, 10), {"z": 0})
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.jump_counts, b.jump_counts)
    assert not np.array_equal(a.jump_counts, d.jump_counts)


def test_zero_duration_warns():
    c = Circuit(Registers(1), ())
    with pytest.warns(NoiseScheduleWarning):
        run_trajectories(c, State.zero(1), NoiseModel(qubit_dephasing=1.0), TrajectoryConfig(1), {"z": 0},
                         record_layers=[-1])


def test_timeseries_csv(tmp_path):
    c = idle_circuit(Registers(1), head=[H(0)])
    res = run_trajectories(c, State.zero(1), NoiseModel(qubit_dephasing=0.001), TrajectoryConfig(4, 0),
                           {"x": x_observable(0, 1), "z": 0}, record_layers=[-1, 0, 5])
    p = tmp_path / "ts.csv"
    res.to_csv(p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["t_ns", "observable_name", "mean", "stderr"]
    assert len(rows) == 1 + 3 * 2
    assert [float(r[0]) for r in rows[1::2]] == [0.0, 40.0, 240.0]


@pytest.mark.parametrize("bad", [0, -1])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        TrajectoryConfig(bad)


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        NoiseModel(qubit_dephasing=-1.0)
