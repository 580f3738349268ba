"""Inductively coupled pair: current states, controlled phase, protocol.

Qubit 1 (control) is rotated into its current basis and opened along a
non-mixing path, so a circulating current flows whose sign depends on its
logical state. Through the mutual inductance this shifts the phase seen by
qubit 2 (target), on which a phase gate is run. Closing and un-rotating
the control gives a controlled phase gate.

Conventions:

* The phase derivative uses the model phase phi1 (pinned to zero in the
  unperturbed model). Currents are 2 dE/dphi1 in units with e = hbar = 1
  and energies in E~_C, so |I1| = alpha / sqrt(2) at (pi/4, pi/4).
* The current state v2p = (i v2 + v3)/sqrt(2) carries negative current and
  v3p = (-i v2 + v3)/sqrt(2) positive current.
* The induced phase on the target is -delta on the v2p branch and +delta on
  the v3p branch. The target phase gate in a branch uses phi2 equal to half
  the induced phase (the device phase is twice the model phase).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import (DeviceParams, PhysicalControls, compile_schedule, current_operator,
                     map_to_physical, truncated_hamiltonian)
from .dynamics import simulate
from .loops import GateSequence, compose, hadamard_loop, phase_gate_sequence
from .model import ModelParams, ParamPath, eigenframe, transport
from .numerics import ValidationError

LINEAR_PHI1_MAX = 0.1
SQRT2 = np.sqrt(2.0)
OPEN_POINT = (np.pi / 4, np.pi / 4)
# current-basis coordinates in the (v2, v3) frame
CURRENT_BASIS = np.array([[1j, -1j], [1.0, 1.0]], dtype=complex) / SQRT2
BRANCHES = ("v2p", "v3p")


class PerturbativeBoundError(ValueError):
    """Parameters outside the linear-response regime."""


@dataclass(frozen=True)
class CouplingParams:
    """Mutual-inductance coupling in reduced units.

    ``M`` folds pi M / Phi0 into one number, so the induced phase is
    ``M * |I1|``; likewise ``L_self`` gives the self-induced phase
    ``L_self * |I1|``. ``alpha`` is the control qubit's gap.
    """

    M: float
    alpha: float = 0.1
    L_self: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if abs(self.delta_phi2) >= np.pi / 2:
            raise PerturbativeBoundError(
                f"|delta_phi2| = {abs(self.delta_phi2):.4g} must be below pi/2")

    @property
    def current(self) -> float:
        """|I1| at the open point (pi/4, pi/4)."""
        return self.alpha / SQRT2

    @property
    def delta_phi2(self) -> float:
        return self.M * self.current

    @classmethod
    def for_delta(cls, delta_phi2: float, alpha: float = 0.1, L_self: float = 0.0
                  ) -> "CouplingParams":
        return cls(delta_phi2 * SQRT2 / alpha, alpha, L_self)


@dataclass(frozen=True)
class PerturbedFrame:
    v1: np.ndarray
    v2p: np.ndarray
    v3p: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.v1, self.v2p, self.v3p])


def perturbed_frame(p: ModelParams) -> PerturbedFrame:
    fr = eigenframe(p)
    return PerturbedFrame(fr.v1, (1j * fr.v2 + fr.v3) / SQRT2, (-1j * fr.v2 + fr.v3) / SQRT2)


def _shift_rate(p: ModelParams) -> float:
    return p.alpha * np.cos(p.theta2) ** 2 * np.sin(2 * p.theta1) * np.sin(p.theta2)


def perturbed_hamiltonian(p: ModelParams, phi1: float) -> np.ndarray:
    """Linear-in-phi1 Hamiltonian in the frame (v1, v2p, v3p)."""
    if abs(phi1) > LINEAR_PHI1_MAX:
        raise PerturbativeBoundError(f"|phi1| = {abs(phi1):.3g} exceeds {LINEAR_PHI1_MAX}")
    f = (p.alpha * (1j * np.cos(2 * p.theta1) + np.sin(2 * p.theta1) * np.sin(p.theta2))
         * np.sin(2 * p.theta2) / (2 * SQRT2))
    g = _shift_rate(p)
    return np.array([
        [p.eta + p.alpha, -np.conj(f) * phi1, f * phi1],
        [-f * phi1, p.eta - g * phi1, 0.0],
        [np.conj(f) * phi1, 0.0, p.eta + g * phi1],
    ], dtype=complex)


def current_expectation(p: ModelParams, branch: str) -> float:
    """Circulating current of a current state (e = hbar = 1)."""
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    sign = -1.0 if branch == "v2p" else 1.0
    return float(sign * 2.0 * _shift_rate(p))


def current_basis_rotation() -> np.ndarray:
    """Geometric gate taking |0>, |1> to (i|0>+|1>)/sqrt2, (-i|0>+|1>)/sqrt2.

    Built from the Hadamard loop followed by the phase gate with
    phi2 = -pi/8, both up to global phase.
    """
    return compose(current_rotation_sequence())


def current_rotation_sequence() -> GateSequence:
    seq = GateSequence((hadamard_loop(),)) + phase_gate_sequence(-np.pi / 8)
    return GateSequence(seq.loops, name="current_rotation")


def opening_path() -> ParamPath:
    """(0,0) -> (0,pi/4) -> (pi/4,pi/4) at phi2 = 0."""
    return ParamPath.from_points([(0, 0), (0, np.pi / 4), OPEN_POINT], 0.0, name="open")


def transport_in_current_basis(path: ParamPath, steps: int = 4096) -> np.ndarray:
    u = transport(path, steps)
    return CURRENT_BASIS.conj().T @ u @ CURRENT_BASIS


def controlled_phase(delta_phi2: float) -> np.ndarray:
    """diag(e^{i d}, e^{-i d}, e^{-i d}, e^{i d}) on |c t> = |00>, |01>, |10>, |11>."""
    z = np.array([1.0, -1.0])
    return np.diag(np.exp(1j * delta_phi2 * np.concatenate([z, -z])))


def compensate_local_phases(m: np.ndarray, target: np.ndarray):
    """Strip a global phase and single-qubit z rotations from ``m``.

    Phases on |00>, |01>, |10> are matched to ``target`` exactly; whatever
    is left on |11> (and off the diagonal) is the residual error.
    Returns (compensated matrix, max-norm error, (global, control, target)).
    """
    m = np.asarray(m, dtype=complex)
    d = np.diag(target.conj().T @ m)
    chi = np.angle(d[0])
    bt = np.angle(d[1]) - chi
    bc = np.angle(d[2]) - chi
    corr = np.kron(np.diag([1.0, np.exp(1j * bc)]), np.diag([1.0, np.exp(1j * bt)]))
    out = np.exp(-1j * chi) * corr.conj() @ m
    return out, float(np.max(np.abs(out - target))), (float(chi), float(bc), float(bt))


def _branch_target_gate(induced: float) -> GateSequence:
    return phase_gate_sequence(induced / 2.0)


def _branch_induced(coupling: CouplingParams) -> dict:
    d = coupling.delta_phi2
    return {"v2p": -d, "v3p": d}


@dataclass(frozen=True)
class ProtocolResult:
    unitary: np.ndarray
    compensated: np.ndarray
    error: float
    fidelity: float
    delta_phi2: float
    currents: dict
    mode: str
    local_phases: tuple

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "delta_phi2": self.delta_phi2,
            "branch_currents": self.currents,
            "unitary": {"real": self.unitary.real.tolist(), "imag": self.unitary.imag.tolist()},
            "compensated": {"real": self.compensated.real.tolist(),
                            "imag": self.compensated.imag.tolist()},
            "local_phases": {"global": self.local_phases[0], "control_z": self.local_phases[1],
                             "target_z": self.local_phases[2]},
            "error_to_ideal": self.error,
            "fidelity_to_ideal": self.fidelity,
        }


def _geometric_unitary(coupling: CouplingParams, steps: int) -> np.ndarray:
    rot = current_basis_rotation()
    t = transport_in_current_basis(opening_path(), steps)
    open_ = np.kron(t @ CURRENT_BASIS.conj().T @ rot, np.eye(2))
    induced = _branch_induced(coupling)
    mid = np.zeros((4, 4), dtype=complex)
    for i, b in enumerate(BRANCHES):
        proj = np.zeros((2, 2))
        proj[i, i] = 1.0
        mid += np.kron(proj, compose(_branch_target_gate(induced[b]), steps))
    return open_.conj().T @ mid @ open_


def _physical_current_states(c: PhysicalControls, dev: DeviceParams) -> np.ndarray:
    """Ground-space eigenvectors of the current operator, ascending current."""
    w, v = np.linalg.eigh(truncated_hamiltonian(c, dev))
    g = v[:, :2]
    jw, jv = np.linalg.eigh(g.conj().T @ current_operator(c, dev) @ g)
    return g @ jv, jw


def _dynamic_unitary(coupling: CouplingParams, dev: DeviceParams, alpha_t: float,
                     steps: int):
    alpha = coupling.alpha
    T = alpha_t / alpha
    rot = current_rotation_sequence()
    opening = compile_schedule([rot, opening_path()], T, dev, alpha, per_segment=True)
    closing = compile_schedule([opening_path().reversed(),
                                GateSequence(tuple(lp.reversed() for lp in rot.loops[::-1]))],
                               T, dev, alpha, per_segment=True)
    opened = simulate(opening, steps=steps * len(opening.segments))
    psi_open = opened.states * np.exp(1j * opened.dynamical_phase)
    end = ModelParams(0.0, alpha, *OPEN_POINT, 0.0)
    w, currents = _physical_current_states(map_to_physical(end, dev), dev)
    # branch v2p carries the negative current
    closed = simulate(closing, psi0=w, steps=steps * len(closing.segments))
    back = closed.states[1:, :] * np.exp(1j * closed.dynamical_phase)
    induced = _branch_induced(coupling)
    u = np.zeros((4, 4), dtype=complex)
    for i, b in enumerate(BRANCHES):
        seq = _branch_target_gate(induced[b])
        sched = compile_schedule(seq, T, dev, alpha, per_segment=True)
        g = simulate(sched, steps=steps * len(sched.segments)).logical
        amp = w[:, i].conj() @ psi_open  # row over initial control states
        u += np.kron(np.outer(back[:, i], amp), g)
    return u, currents


def two_qubit_protocol(coupling: CouplingParams, dev: DeviceParams | None = None,
                       mode: str = "geometric", alpha_t: float = 200.0,
                       steps: int = 4096, geometric_steps: int = 4096
                       ) -> ProtocolResult:
    """Net 4x4 map of rotate, open, conditional phase gate, close, un-rotate.

    ``mode="geometric"`` composes exact holonomies; ``mode="dynamic"``
    integrates the device schedules with ``alpha_t`` per segment and
    ``steps`` integration steps per segment.
    """
    dev = dev or DeviceParams()
    p = ModelParams(0.0, coupling.alpha, *OPEN_POINT, 0.0)
    currents = {b: current_expectation(p, b) for b in BRANCHES}
    if mode == "geometric":
        u = _geometric_unitary(coupling, geometric_steps)
    elif mode == "dynamic":
        u, phys = _dynamic_unitary(coupling, dev, alpha_t, steps)
        currents = {b: float(x) for b, x in zip(BRANCHES, phys)}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ideal = controlled_phase(coupling.delta_phi2)
    comp, err, phases = compensate_local_phases(u, ideal)
    fid = float(abs(np.trace(ideal.conj().T @ comp)) / 4.0)
    return ProtocolResult(u, comp, err, fid, coupling.delta_phi2, currents, mode, phases)


def self_inductance_check(p: ModelParams, L_self: float) -> dict:
    """Branch energies when each current state feels its own induced phase.

    The v2p branch sits at phi1 = -L|I|, v3p at +L|I|. The report holds the
    exact splitting between them and the beyond-linear shift of one branch,
    evaluated at the full and at the halved phase.
    """
    i1 = abs(current_expectation(p, "v2p"))
    x = L_self * i1
    if abs(x) > LINEAR_PHI1_MAX:
        raise PerturbativeBoundError(f"self-induced phase {x:.3g} exceeds {LINEAR_PHI1_MAX}")

    def branch_energy(phi1: float, idx: int) -> float:
        w, v = np.linalg.eigh(perturbed_hamiltonian(p, phi1))
        return float(w[np.argmax(np.abs(v[idx, :]))])

    def report(dphi: float) -> tuple[float, float]:
        e2 = branch_energy(-dphi, 1)
        e3 = branch_energy(dphi, 2)
        linear = p.eta + _shift_rate(p) * dphi
        return e3 - e2, e2 - linear

    split, resid = report(x)
    split_half, resid_half = report(x / 2)
    ratio = resid / resid_half if resid_half != 0 else float("nan")
    return {"delta_phi1": x, "current": i1, "splitting": split, "splitting_half": split_half,
            "residual": resid, "residual_half": resid_half, "residual_ratio": ratio}


def eq18_vs_physical(p: ModelParams, phi1: float, dev: DeviceParams) -> float:
    """Max eigenvalue gap between the linear model and the device at phase phi1.

    The device phase is -2 phi1 on top of the mapped controls; energies are
    compared relative to the respective ground energy at phi1 = 0.
    """
    if abs(p.theta2) < 1e-12 or abs(p.theta1 % (np.pi / 2)) < 1e-12:
        raise ValidationError("the comparison needs all SQUIDs open")
    base = map_to_physical(p, dev)
    c = PhysicalControls(base.n_gs, base.n_gd, base.E_L, base.E_m_J, base.E_R,
                         base.phi - 2.0 * phi1)
    e_phys = np.linalg.eigvalsh(truncated_hamiltonian(c, dev))
    e0 = np.linalg.eigvalsh(truncated_hamiltonian(base, dev))[0]
    e_model = np.linalg.eigvalsh(perturbed_hamiltonian(p, phi1))
    return float(np.max(np.abs((e_phys - e0) - (e_model - p.eta))))
