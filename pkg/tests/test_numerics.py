import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from holoqc.numerics import (ConvergenceError, ValidationError, expm_skew_hermitian,
                             fix_phases, herm_eig, propagate, propagate_stack,
                             unitarity_error, unitary_step)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def random_hermitian(rng, n=3):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


@given(arrays(np.float64, (2, 3, 3), elements=finite))
@settings(max_examples=50, deadline=None)
def test_herm_eig_reconstructs(parts):
    a = parts[0] + 1j * parts[1]
    h = a + a.conj().T
    dec = herm_eig(h)
    assert np.allclose(dec.reconstruct(), h, atol=1e-10)
    assert np.all(np.diff(dec.eigenvalues) >= -1e-12)
    assert unitarity_error(dec.eigenvectors) < 1e-12


def test_herm_eig_is_deterministic():
    h = random_hermitian(np.random.default_rng(1))
    a, b = herm_eig(h), herm_eig(h.copy())
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_fix_phases_largest_component_real_positive():
    rng = np.random.default_rng(2)
    v = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    f = fix_phases(v)
    for j in range(3):
        k = np.argmax(np.abs(f[:, j]))
        assert abs(f[k, j].imag) < 1e-14 and f[k, j].real > 0
        # only a phase was changed
        assert abs(abs(np.vdot(f[:, j], v[:, j])) - 1) < 1e-12


def test_fix_phases_tie_goes_to_lowest_index():
    v = np.array([[1j], [1j]]) / np.sqrt(2)
    f = fix_phases(v)
    assert f[0, 0].real > 0 and abs(f[0, 0].imag) < 1e-15


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        herm_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValidationError):
        herm_eig(np.ones((2, 3)))


def test_convergence_error_carries_residual():
    err = ConvergenceError("boom", 1e-3)
    assert err.residual == 1e-3 and "1.000e-03" in str(err)


@given(arrays(np.float64, (2, 2, 2), elements=finite))
@settings(max_examples=50, deadline=None)
def test_expm_matches_scipy(parts):
    h = parts[0] + 1j * parts[1]
    a = h - h.conj().T  # anti-Hermitian
    assert np.allclose(expm_skew_hermitian(a), scipy.linalg.expm(a), atol=1e-10)


def test_expm_rejects_hermitian_input():
    with pytest.raises(ValidationError):
        expm_skew_hermitian(np.eye(2))


def test_unitary_step_batched_matches_scipy():
    rng = np.random.default_rng(3)
    hs = np.array([random_hermitian(rng) for _ in range(4)])
    us = unitary_step(hs, 0.3)
    for h, u in zip(hs, us):
        assert np.allclose(u, scipy.linalg.expm(-0.3j * h), atol=1e-12)


def test_propagate_constant_hamiltonian_exact():
    h = random_hermitian(np.random.default_rng(4))
    psi0 = np.array([1, 0, 0], dtype=complex)
    psi = propagate(lambda t: h, psi0, 0.0, 2.0, 7)
    assert np.allclose(psi, scipy.linalg.expm(-2j * h) @ psi0, atol=1e-12)


def test_propagate_second_order_convergence():
    # H(t) = cos(t) X + t Z: midpoint rule error falls ~4x per halving of dt
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    h = lambda t: np.cos(t) * x + t * z  # noqa: E731
    psi0 = np.array([1, 0], dtype=complex)
    ref = propagate(h, psi0, 0, 2, 8192)
    e1 = np.linalg.norm(propagate(h, psi0, 0, 2, 64) - ref)
    e2 = np.linalg.norm(propagate(h, psi0, 0, 2, 128) - ref)
    assert 3.5 < e1 / e2 < 4.5


def test_propagate_preserves_norm_and_validates():
    h = random_hermitian(np.random.default_rng(5))
    psi = propagate(lambda t: t * h, np.array([0, 1, 0], dtype=complex), 0, 5, 100)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    with pytest.raises(ValidationError):
        propagate(lambda t: h, np.array([1, 1, 0]), 0, 1, 10)
    with pytest.raises(ValidationError):
        propagate(lambda t: h, np.array([1, 0, 0]), 0, 1, 0)


def test_propagate_stack_records_trace():
    hs = np.zeros((6, 2, 2))
    psi, trace = propagate_stack(hs, np.array([1, 0]), 0.1, record_every=2)
    assert len(trace) == 4 and np.allclose(psi, [1, 0])
