import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc.model import (ModelParams, ParamPath, PathContractError, connections, eigenframe,
                          holonomy, model_hamiltonian, rectangle_closed_form, transport)

angle = st.floats(-np.pi, np.pi, allow_nan=False)
params = st.builds(ModelParams, eta=st.floats(-2, 2), alpha=st.floats(0.05, 3),
                   theta1=angle, theta2=angle, phi2=angle)


@given(params)
@settings(max_examples=100, deadline=None)
def test_spectrum_is_degenerate_ground_plus_gap(p):
    h = model_hamiltonian(p)
    assert np.allclose(h, h.conj().T, atol=1e-14)
    w = np.linalg.eigvalsh(h)
    assert np.allclose(w, [p.eta, p.eta, p.eta + p.alpha], atol=1e-12)


@given(params)
@settings(max_examples=100, deadline=None)
def test_eigenframe_diagonalizes(p):
    fr = eigenframe(p)
    v = fr.matrix()
    assert np.allclose(v.conj().T @ v, np.eye(3), atol=1e-13)
    h = model_hamiltonian(p)
    assert np.allclose(h @ fr.v1, (p.eta + p.alpha) * fr.v1, atol=1e-12)
    assert np.allclose(h @ fr.ground(), p.eta * fr.ground(), atol=1e-12)


def test_trivial_point_frame():
    fr = eigenframe(ModelParams())
    assert np.allclose(fr.v2, [0, 1, 0]) and np.allclose(fr.v3, [0, 0, 1])
    assert np.allclose(np.diag(model_hamiltonian(ModelParams(alpha=2.0))), [2, 0, 0])


def fd_connection(p: ModelParams, name: str, h: float = 1e-5) -> np.ndarray:
    """Oracle: central differences of the frame, entry [a, b] = <v_b | d v_a>."""
    def ground(q):
        return eigenframe(q).ground()
    kw = {"theta1": p.theta1, "theta2": p.theta2, "phi2": p.phi2}
    up, dn = dict(kw), dict(kw)
    up[name] += h
    dn[name] -= h
    d = (ground(ModelParams(**up)) - ground(ModelParams(**dn))) / (2 * h)
    g = ground(p)
    return (g.conj().T @ d).T


def test_connection_matches_finite_differences():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        t1, t2, ph = rng.uniform(-np.pi, np.pi, 3)
        p = ModelParams(0.0, 1.0, t1, t2, ph)
        c = connections(p)
        for name, a in (("theta1", c.A_theta1), ("theta2", c.A_theta2), ("phi2", c.A_phi2)):
            worst = max(worst, np.max(np.abs(a - fd_connection(p, name))))
    assert worst <= 1e-6


def test_connection_is_transpose_of_row_j_col_i_layout():
    p = ModelParams(0.0, 1.0, 0.4, 0.9, 0.3)
    ground = eigenframe(p).ground()
    h = 1e-6
    d = (eigenframe(p.at(p.theta1 + h, p.theta2, p.phi2)).ground()
         - eigenframe(p.at(p.theta1 - h, p.theta2, p.phi2)).ground()) / (2 * h)
    row_j_col_i = ground.conj().T @ d
    assert np.allclose(connections(p).A_theta1, row_j_col_i.T, atol=1e-8)
    assert not np.allclose(connections(p).A_theta1, row_j_col_i, atol=1e-3)


def test_connections_anti_hermitian():
    c = connections(ModelParams(0, 1, 0.3, 1.1, -0.7))
    for a in (c.A_theta1, c.A_theta2, c.A_phi2):
        assert np.allclose(a, -a.conj().T)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(alpha=0.0)
    with pytest.raises(ValueError):
        ModelParams(theta1=np.nan)
    assert ModelParams().phi1 == 0.0


def test_path_validation_and_roundtrip():
    with pytest.raises(ValueError):
        ParamPath(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        ParamPath(np.zeros((3, 3)), segment_fractions=[1.0])
    p = ParamPath.from_points([(0, 0), (1, 0), (0, 0)], 0.2, segment_fractions=[1, 3], name="x")
    assert np.allclose(p.segment_fractions, [0.25, 0.75])
    q = ParamPath.from_dict(p.to_dict())
    assert np.array_equal(q.waypoints, p.waypoints) and q.name == "x"
    assert p.is_loop and not ParamPath.from_points([(0, 0), (1, 0)]).is_loop


def test_loop_closed_in_hamiltonian_not_coordinates():
    # theta2 -> theta2 + pi flips cos and sin together; H is unchanged
    assert ParamPath.from_points([(0.3, 0.2), (0.3, 0.2 + np.pi)]).is_loop
    assert not ParamPath.from_points([(0.3, 0.2), (0.3 + np.pi, 0.2)]).is_loop


def test_then_requires_exact_join():
    a = ParamPath.from_points([(0, 0), (1, 0)])
    b = ParamPath.from_points([(1, 0), (1, 1)])
    c = a.then(b)
    assert c.n_segments == 2 and np.allclose(c.waypoints[-1], [1, 1, 0])
    with pytest.raises(PathContractError):
        a.then(ParamPath.from_points([(2, 0), (1, 1)]))


def test_holonomy_rejects_open_path():
    with pytest.raises(PathContractError, match="transport"):
        holonomy(ParamPath.from_points([(0, 0), (0.5, 0.5)]))
    with pytest.raises(ValueError):
        transport(ParamPath.from_points([(0, 0), (0.5, 0.5)]), steps=0)


rect = st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
                 st.floats(-1.5, 1.5), st.floats(-np.pi, np.pi))


@given(rect)
@settings(max_examples=30, deadline=None)
def test_holonomy_unitary_and_reversal_inverts(r):
    a, b, c, d, ph = r
    loop = ParamPath.from_points([(a, c), (b, c), (b, d), (a, d), (a, c)], ph)
    u = holonomy(loop, 512)
    assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    assert np.allclose(holonomy(loop.reversed(), 512) @ u, np.eye(2), atol=1e-10)


def test_rectangle_closed_form_trivial_cases():
    assert np.allclose(rectangle_closed_form(0, 1, 0.2, 0.2, 0.5), np.eye(2))
    u = rectangle_closed_form(0, np.pi / 2, 0, np.pi / 2, 0.0)
    assert np.allclose(u, [[0, 1], [-1, 0]], atol=1e-14)
