import numpy as np
import pytest

from holoqc.device import ControlSchedule, DeviceParams, ScheduleSegment, compile_schedule
from holoqc.dynamics import (ScheduleMismatchError, adiabaticity_scan, gate_fidelity, leakage,
                             measure_charge, simulate)
from holoqc.loops import compose, gate_sequence, hadamard_loop
from holoqc.model import holonomy
from holoqc.numerics import ValidationError

DEV = DeviceParams(k=1 / 3)


def closed_schedule(duration=50.0):
    seg = ScheduleSegment(0.0, duration, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.0, "closed")
    return ControlSchedule(DEV, 0.1, (seg,), name="idle")


def test_idle_schedule_keeps_state():
    res = simulate(closed_schedule(), psi0=np.array([0, 1, 0]), steps=64)
    assert abs(abs(res.states[1, 0]) - 1) < 1e-12
    res = simulate(closed_schedule(), steps=64)
    assert res.leakage == pytest.approx(0.0, abs=1e-12)
    # dynamical phase removed: logical block is the identity
    assert np.allclose(res.logical, np.eye(2), atol=1e-12)


def test_simulate_validates_input():
    with pytest.raises(ValidationError):
        simulate(closed_schedule(), psi0=np.array([1, 1, 0]), steps=4)
    with pytest.raises(ValidationError):
        simulate(closed_schedule(), steps=0)


def test_norm_conserved_over_schedule():
    sched = compile_schedule(hadamard_loop(), 500.0, DEV, 0.1)
    res = simulate(sched, steps=2**12)
    assert np.max(np.abs(np.linalg.norm(res.states, axis=0) - 1)) <= 1e-9


def test_hadamard_schedule_follows_holonomy():
    sched = compile_schedule(hadamard_loop(), 100 / 0.1, DEV, 0.1)
    res = simulate(sched, steps=2**13)
    assert gate_fidelity(res, holonomy(hadamard_loop())) >= 0.99
    assert 0 <= res.leakage < 0.01


def test_record_trace():
    res = simulate(closed_schedule(), steps=16, record_every=4)
    assert len(res.trace) == 5


def test_fidelity_definitions():
    u = np.array([[0, 1], [1j, 0]])
    assert gate_fidelity(u, u) == pytest.approx(1.0)
    assert gate_fidelity(np.exp(0.7j) * u, u) == pytest.approx(1.0)
    assert gate_fidelity(np.eye(2), u) == pytest.approx(0.0)
    assert leakage(0.9 * u) == pytest.approx(1 - 0.81)
    with pytest.raises(ScheduleMismatchError):
        gate_fidelity(np.eye(3), u)


def test_scan_rows_and_parallel_order():
    seq = gate_sequence("hadamard")
    target = compose(seq, 1024)
    serial = adiabaticity_scan(seq, target, [50, 25], DEV, steps=2**11)
    assert [r[0] for r in serial.rows] == [25, 50]
    parallel = adiabaticity_scan(seq, target, [25, 50], DEV, steps=2**11, workers=2)
    assert parallel.rows == serial.rows
    assert set(serial.to_dict()) >= {"rows", "leakage_loglog_slope", "monotone_leakage"}


def test_measure_basis_state():
    res = measure_charge(np.array([0, 1, 0]), shots=100, seed=1)
    assert res.counts == {"a": 0, "0": 100, "1": 0}
    assert not res.left_island_bits.any()
    res = measure_charge(np.array([1, 0, 0]), shots=10, seed=1)
    assert res.left_island_bits.all()


def test_measure_born_frequencies():
    shots = 10**5
    res = measure_charge(np.array([0, 1, 1]) / np.sqrt(2), shots=shots, seed=123)
    sigma = np.sqrt(shots * 0.25)
    assert abs(res.counts["0"] - shots / 2) <= 3 * sigma
    assert res.counts["0"] + res.counts["1"] == shots


def test_measure_is_seeded_and_validates():
    psi = np.array([0.6, 0.0, 0.8])
    a = measure_charge(psi, shots=50, seed=9).left_island_bits
    b = measure_charge(psi, shots=50, seed=9).left_island_bits
    assert np.array_equal(a, b)
    with pytest.raises(ValidationError):
        measure_charge(np.array([1, 1, 0]))
    with pytest.raises(ValidationError):
        measure_charge(np.array([1, 0]))
