"""Dense small-matrix kernels shared by every other module.

Reduced units throughout: hbar = 1, energies in units of the charging
energy E~_C, times in hbar/E~_C.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-9


class ValidationError(ValueError):
    """Input violates a numerical precondition (hermiticity, normalization, ...)."""


class ConvergenceError(RuntimeError):
    """Eigensolver failed; carries the reconstruction residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _asmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermiticity_error(m) -> float:
    a = np.asarray(m)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def unitarity_error(u) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest-magnitude entry is real positive.

    Ties between equal-magnitude entries go to the lowest index (within 1e-9),
    which keeps the convention stable under round-off.
    """
    v = np.array(vectors, dtype=complex)
    mags = np.abs(v)
    for j in range(v.shape[1]):
        col = mags[:, j]
        k = int(np.flatnonzero(col >= col.max() - 1e-9)[0])
        v[:, j] *= np.conj(v[k, j]) / abs(v[k, j])
    return v


def herm_eig(m, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, ascending eigenvalues.

    Eigenvector phases follow the largest-component-real-positive convention,
    so repeated calls on the same matrix return identical frames.
    """
    a = _asmatrix(m)
    err = hermiticity_error(a)
    if err > tol:
        raise ValidationError(f"matrix is not Hermitian: max|M - M^H| = {err:.3e}")
    a = 0.5 * (a + a.conj().T)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigh failed: {exc}", float("nan")) from exc
    dec = EigenDecomposition(w, fix_phases(v))
    scale = max(1.0, float(np.max(np.abs(a))))
    residual = float(np.max(np.abs(dec.reconstruct() - a)))
    if residual > 1e-10 * scale * a.shape[0]:
        raise ConvergenceError("eigendecomposition does not reconstruct input", residual)
    return dec


def expm_skew_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """exp(A) for anti-Hermitian A, computed through the spectrum of iA."""
    a = _asmatrix(a)
    err = float(np.max(np.abs(a + a.conj().T))) if a.size else 0.0
    if err > tol:
        raise ValidationError(f"matrix is not anti-Hermitian: max|A + A^H| = {err:.3e}")
    w, v = np.linalg.eigh(0.5j * (a - a.conj().T))
    # A = -i (iA) ;  exp(A) = V exp(-i w) V^H
    return (v * np.exp(-1j * w)) @ v.conj().T


def unitary_step(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i H dt) for one Hermitian H, or a stack of them (..., n, n)."""
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * dt)
    return (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def propagate_stack(hamiltonians: np.ndarray, psi0, dt: float,
                    record_every: int = 0):
    """Apply exp(-i H_k dt) for each H_k in order.

    ``psi0`` may be a vector or a matrix of column states. When
    ``record_every`` > 0 the state after every that-many steps is also
    returned (the initial state included).
    """
    psi = np.array(psi0, dtype=complex)
    steps = np.asarray(hamiltonians)
    props = unitary_step(steps, dt)
    trace = [psi.copy()] if record_every else None
    for k, u in enumerate(props, start=1):
        psi = u @ psi
        if record_every and k % record_every == 0:
            trace.append(psi.copy())
    if record_every:
        return psi, trace
    return psi


def propagate(h: Callable[[float], np.ndarray], psi0, t0: float, t1: float,
              steps: int) -> np.ndarray:
    """Midpoint exponential propagator for i d(psi)/dt = H(t) psi.

    Each step applies exp(-i H(t_mid) dt); every factor is exactly unitary,
    so the norm is conserved to round-off independently of the step size.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    psi = np.asarray(psi0, dtype=complex)
    norm = np.linalg.norm(psi, axis=0)
    if np.any(np.abs(norm - 1.0) > NORM_TOL):
        raise ValidationError(f"initial state not normalized (norm={norm})")
    dt = (t1 - t0) / steps
    mids = t0 + (np.arange(steps) + 0.5) * dt
    hs = np.array([np.asarray(h(t), dtype=complex) for t in mids])
    return propagate_stack(hs, psi, dt)
