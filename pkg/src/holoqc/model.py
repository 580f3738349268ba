"""Three-level model Hamiltonian with a doubly degenerate ground state.

Basis ordering is (|a>, |0>, |1>): the auxiliary excited state followed by
the two logical states. The spectrum is {eta, eta, eta + alpha} for every
control point (theta1, theta2, phi2); phi1 is pinned to zero.

Holonomies are path-ordered products over the connection matrices in the
(v2, v3) frame. The connection entries are indexed as
``A[a, b] = <v_b | d v_a>`` over (v2, v3), which is the layout that
reproduces the Hadamard, U2 and phase-gate matrices exactly (see
``tests/test_model.py`` for the finite-difference check of this layout).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import expm_skew_hermitian, unitary_step


class PathContractError(ValueError):
    """A path was used where its shape does not satisfy the contract."""


@dataclass(frozen=True)
class ModelParams:
    eta: float = 0.0
    alpha: float = 1.0
    theta1: float = 0.0
    theta2: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        for name in ("eta", "theta1", "theta2", "phi2"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def phi1(self) -> float:
        return 0.0

    def at(self, theta1: float, theta2: float, phi2: float) -> "ModelParams":
        return ModelParams(self.eta, self.alpha, theta1, theta2, phi2)


@dataclass(frozen=True)
class Eigenframe:
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray

    def matrix(self) -> np.ndarray:
        """Columns (v1, v2, v3)."""
        return np.column_stack([self.v1, self.v2, self.v3])

    def ground(self) -> np.ndarray:
        return np.column_stack([self.v2, self.v3])


@dataclass(frozen=True)
class ConnectionSet:
    A_theta1: np.ndarray
    A_theta2: np.ndarray
    A_phi2: np.ndarray


def model_hamiltonian(p: ModelParams) -> np.ndarray:
    c1, s1 = np.cos(p.theta1), np.sin(p.theta1)
    c2, s2 = np.cos(p.theta2), np.sin(p.theta2)
    e2 = np.exp(-1j * p.phi2)
    a, eta = p.alpha, p.eta
    h = np.empty((3, 3), dtype=complex)
    h[0, 0] = eta + a * c1**2 * c2**2
    h[1, 1] = eta + a * c2**2 * s1**2
    h[2, 2] = eta + a * s2**2
    h[0, 1] = -a * c1 * c2**2 * s1
    h[0, 2] = -a * e2 * c1 * c2 * s2
    h[1, 2] = a * e2 * c2 * s1 * s2
    h[1, 0] = np.conj(h[0, 1])
    h[2, 0] = np.conj(h[0, 2])
    h[2, 1] = np.conj(h[1, 2])
    return h


def eigenframe(p: ModelParams) -> Eigenframe:
    """Closed-form instantaneous eigenvectors; no re-phasing is applied."""
    c1, s1 = np.cos(p.theta1), np.sin(p.theta1)
    c2, s2 = np.cos(p.theta2), np.sin(p.theta2)
    e2 = np.exp(-1j * p.phi2)
    v1 = np.array([-e2 * c1 * c2, e2 * c2 * s1, s2], dtype=complex)
    v2 = np.array([s1, c1, 0.0], dtype=complex)
    v3 = np.array([e2 * c1 * s2, -e2 * s1 * s2, c2], dtype=complex)
    return Eigenframe(v1, v2, v3)


def connections(p: ModelParams) -> ConnectionSet:
    s2 = np.sin(p.theta2)
    e = np.exp(1j * p.phi2)
    a1 = np.array([[0.0, e * s2], [-np.conj(e) * s2, 0.0]], dtype=complex)
    ap = np.array([[0.0, 0.0], [0.0, -1j * s2**2]], dtype=complex)
    return ConnectionSet(a1, np.zeros((2, 2), dtype=complex), ap)


def hamiltonians_match(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    pa = ModelParams(0.0, 1.0, *a)
    pb = ModelParams(0.0, 1.0, *b)
    return float(np.max(np.abs(model_hamiltonian(pa) - model_hamiltonian(pb)))) <= tol


@dataclass(frozen=True)
class ParamPath:
    """Piecewise-linear path through (theta1, theta2, phi2).

    ``segment_fractions`` give each segment's share of the traversal time;
    they are normalized to sum to one. ``irrelevant`` marks segments along
    which the device Hamiltonian does not change, so a schedule compiler may
    skip them.
    """

    waypoints: np.ndarray
    segment_fractions: np.ndarray = None
    irrelevant: tuple = None
    name: str = ""

    def __post_init__(self):
        w = np.array(self.waypoints, dtype=float)
        if w.ndim != 2 or w.shape[1] != 3 or len(w) < 2:
            raise ValueError("a path needs >= 2 waypoints of (theta1, theta2, phi2)")
        if not np.all(np.isfinite(w)):
            raise ValueError("waypoints must be finite")
        nseg = len(w) - 1
        if self.segment_fractions is None:
            f = np.full(nseg, 1.0 / nseg)
        else:
            f = np.array(self.segment_fractions, dtype=float)
            if f.shape != (nseg,) or np.any(f <= 0):
                raise ValueError("segment_fractions must be positive, one per segment")
            f = f / f.sum()
        irr = tuple(bool(x) for x in (self.irrelevant or (False,) * nseg))
        if len(irr) != nseg:
            raise ValueError("irrelevant flags must match the segment count")
        w.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "waypoints", w)
        object.__setattr__(self, "segment_fractions", f)
        object.__setattr__(self, "irrelevant", irr)

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]], phi2: float = 0.0,
                    **kw) -> "ParamPath":
        """Build from (theta1, theta2) pairs at constant phi2."""
        pts = [(float(a), float(b), float(phi2)) for a, b in points]
        return cls(np.array(pts), **kw)

    @property
    def n_segments(self) -> int:
        return len(self.waypoints) - 1

    @property
    def is_loop(self) -> bool:
        return hamiltonians_match(self.waypoints[0], self.waypoints[-1])

    def segments(self):
        for i in range(self.n_segments):
            yield self.waypoints[i], self.waypoints[i + 1]

    def reversed(self) -> "ParamPath":
        return ParamPath(self.waypoints[::-1].copy(), self.segment_fractions[::-1].copy(),
                         self.irrelevant[::-1], name=f"{self.name}~" if self.name else "")

    def then(self, other: "ParamPath") -> "ParamPath":
        """Concatenate; ``other`` must start exactly where this path ends."""
        if not np.allclose(self.waypoints[-1], other.waypoints[0], atol=1e-12):
            raise PathContractError("paths do not join")
        w = np.vstack([self.waypoints, other.waypoints[1:]])
        n1, n2 = self.n_segments, other.n_segments
        f = np.concatenate([self.segment_fractions * n1, other.segment_fractions * n2])
        return ParamPath(w, f, self.irrelevant + other.irrelevant,
                         name="*".join(x for x in (other.name, self.name) if x))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "waypoints": self.waypoints.tolist(),
            "segment_fractions": self.segment_fractions.tolist(),
            "irrelevant": list(self.irrelevant),
            "loop": self.is_loop,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParamPath":
        return cls(np.array(d["waypoints"], dtype=float), d.get("segment_fractions"),
                   tuple(d["irrelevant"]) if d.get("irrelevant") else None,
                   name=d.get("name", ""))


def _segment_factors(a: np.ndarray, b: np.ndarray, steps: int) -> np.ndarray:
    """Midpoint factors exp(-(A_t1 dt1 + A_p2 dp2)) along one straight segment."""
    d = (b - a) / steps
    if d[0] == 0.0 and d[2] == 0.0:
        return np.empty((0, 2, 2), dtype=complex)
    x = a + (np.arange(steps)[:, None] + 0.5) * d
    s2 = np.sin(x[:, 1])
    e = np.exp(1j * x[:, 2])
    gen = np.zeros((steps, 2, 2), dtype=complex)
    gen[:, 0, 1] = e * s2 * d[0]
    gen[:, 1, 0] = -np.conj(e) * s2 * d[0]
    gen[:, 1, 1] = -1j * s2**2 * d[2]
    # exp(-G) = exp(-i H) with H = -iG Hermitian
    return unitary_step(-1j * gen, 1.0)


def transport(path: ParamPath, steps: int = 4096) -> np.ndarray:
    """Parallel transport in the fixed (v2, v3) frame along any path.

    For open paths the result depends on the frame convention of
    ``eigenframe``; only closed loops give frame-independent gates.
    ``steps`` is the number of midpoint samples per segment.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    u = np.eye(2, dtype=complex)
    for a, b in path.segments():
        for f in _segment_factors(a, b, steps):
            u = f @ u
    return u


def holonomy(path: ParamPath, steps: int = 4096) -> np.ndarray:
    """Geometric gate of a closed loop in the logical (|0>, |1>) basis."""
    if not path.is_loop:
        raise PathContractError(
            "path is not closed (end-point Hamiltonian differs from start); "
            "use transport() for open paths")
    return transport(path, steps)


def rectangle_closed_form(theta1_min: float, theta1_max: float, theta2_min: float,
                          theta2_max: float, phi2: float) -> np.ndarray:
    """Gate of a rectangular loop at constant phi2.

    Orientation: theta1 increases along the theta2_min edge first, which is
    the traversal of ``loops.rectangle_loop`` and of the U2 loop. The
    Hadamard trapezoid runs the other way and gives the inverse.
    """
    g = (np.sin(theta2_max) - np.sin(theta2_min)) * (theta1_max - theta1_min)
    e = np.exp(1j * phi2)
    gen = np.array([[0.0, e * g], [-np.conj(e) * g, 0.0]], dtype=complex)
    return expm_skew_hermitian(gen)
