import json

import numpy as np
import pytest

from holoqc.loops import (GateSequence, compose, gate_sequence, hadamard_loop,
                          phase_gate_sequence, rectangle_loop, u2_loop)
from holoqc.model import ParamPath, PathContractError, holonomy, rectangle_closed_form

HADAMARD = np.array([[1, -1], [1, 1]]) / np.sqrt(2)


def u2_reference(phi2):
    return np.array([[0, -np.exp(1j * phi2)], [np.exp(-1j * phi2), 0]])


def phase_reference(phi2):
    return -np.diag([np.exp(-2j * phi2), np.exp(2j * phi2)])


def equal_up_to_phase(a, b, tol):
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    ph = a[k] / b[k]
    return abs(abs(ph) - 1) < tol and np.max(np.abs(a - ph * b)) <= tol


def test_hadamard_loop_shape():
    lp = hadamard_loop()
    assert lp.is_loop and lp.n_segments == 4
    assert np.allclose(lp.waypoints[:, 2], 0)


def test_hadamard_gate_exact():
    u = holonomy(hadamard_loop(), 4096)
    assert np.max(np.abs(u - HADAMARD)) <= 1e-8


@pytest.mark.parametrize("phi2", [0.0, np.pi / 6, np.pi / 3, 1.0])
def test_u2_gate(phi2):
    u = holonomy(u2_loop(phi2), 4096)
    assert equal_up_to_phase(u, u2_reference(phi2), 1e-8)
    # frozen orientation: the loop gives exactly minus the reference
    assert np.max(np.abs(u + u2_reference(phi2))) <= 1e-8


@pytest.mark.parametrize("phi2", [0.0, 0.4, np.pi / 2, -1.2])
def test_phase_gate_exact(phi2):
    assert np.max(np.abs(compose(phase_gate_sequence(phi2)) - phase_reference(phi2))) <= 1e-8


def test_phase_gate_zero_is_minus_identity():
    assert np.allclose(compose(gate_sequence("phase", 0.0)), -np.eye(2), atol=1e-10)


def test_u2_irrelevant_edge_flagged():
    assert u2_loop(0.3).irrelevant == (False, False, True, False)


def test_rectangle_loop_matches_closed_form():
    for args in [(0, 1, 0, 0.5, 0.2), (-0.3, 0.7, 0.1, 1.2, -1.0)]:
        lp = rectangle_loop(*args)
        assert np.max(np.abs(holonomy(lp, 4096) - rectangle_closed_form(*args))) <= 1e-8


def test_hadamard_trapezoid_is_inverse_orientation():
    u = holonomy(hadamard_loop(), 4096)
    cf = rectangle_closed_form(0, np.pi / 2, 0, np.pi / 6, 0)
    assert np.allclose(u, cf.conj().T, atol=1e-8)


def test_sequence_junction_rules():
    a = ParamPath.from_points([(0.2, 0.2), (0.5, 0.2), (0.5, 0.5), (0.2, 0.2)], 0.3)
    b = ParamPath.from_points([(0.2, 0.2), (0.5, 0.2), (0.5, 0.5), (0.2, 0.2)], 0.5)
    with pytest.raises(PathContractError, match="phi2 may only change"):
        GateSequence((a, b)).check_junctions()
    GateSequence((a, a)).check_junctions()
    with pytest.raises(PathContractError, match="not a closed loop"):
        GateSequence((ParamPath.from_points([(0, 0), (1, 1)]),)).check_junctions()


def test_sequence_serialization_roundtrip():
    seq = phase_gate_sequence(0.7)
    again = GateSequence.from_json(seq.to_json())
    assert again.phi2_values == pytest.approx([0.7, -0.7])
    assert np.allclose(compose(again), compose(seq))
    assert json.loads(seq.to_json())["name"].startswith("phase")


def test_sequence_concatenation_order():
    seq = gate_sequence("hadamard") + gate_sequence("u2", 0.4)
    assert np.allclose(compose(seq), holonomy(u2_loop(0.4)) @ holonomy(hadamard_loop()))


def test_unknown_gate():
    with pytest.raises(KeyError):
        gate_sequence("toffoli")
