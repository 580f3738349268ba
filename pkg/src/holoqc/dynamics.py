"""Time evolution under compiled schedules, gate fidelity and charge readout."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .device import ControlSchedule, DeviceParams, compile_schedule
from .numerics import NORM_TOL, ValidationError, unitary_step

DEFAULT_STEPS = 2**14
STATE_LABELS = ("a", "0", "1")
# left-island charge n1 = (n + m) / 2 of |a>, |0>, |1>
LEFT_ISLAND_BITS = (1, 0, 1)


class ScheduleMismatchError(ValueError):
    """Evolution result compared against a gate from a different schedule."""


@dataclass(frozen=True)
class EvolutionResult:
    """Final states of an evolution in the charge basis (|a>, |0>, |1>).

    ``states`` has one column per initial state. ``logical`` is the 2x2
    block on (|0>, |1>) with the ground-state dynamical phase removed.
    """

    states: np.ndarray
    logical: np.ndarray
    dynamical_phase: float
    duration: float
    steps: int
    schedule_name: str = ""
    trace: tuple = ()

    @property
    def leakage(self) -> float:
        return leakage(self.logical)


def _ground_phase(h: np.ndarray, dt: float) -> float:
    return float(np.linalg.eigvalsh(h)[:, 0].sum() * dt)


def simulate(schedule: ControlSchedule, psi0=None, steps: int = DEFAULT_STEPS,
             record_every: int = 0, chunk: int = 4096) -> EvolutionResult:
    """Integrate i dpsi/dt = H(t) psi with midpoint exponential steps.

    ``psi0`` defaults to the two logical charge states as columns, so the
    result holds the full 3x2 propagator block. Hamiltonians are built and
    exponentiated in chunks of ``chunk`` steps.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    psi = np.eye(3, dtype=complex)[:, 1:] if psi0 is None else np.array(psi0, dtype=complex)
    if psi.ndim == 1:
        psi = psi[:, None]
    if np.any(np.abs(np.linalg.norm(psi, axis=0) - 1.0) > NORM_TOL):
        raise ValidationError("initial states must be normalized")
    T = schedule.duration
    dt = T / steps
    phase = 0.0
    trace = [psi.copy()] if record_every else []
    for start in range(0, steps, chunk):
        idx = np.arange(start, min(start + chunk, steps))
        h = schedule.hamiltonians((idx + 0.5) * dt)
        phase += _ground_phase(h, dt)
        for k, u in zip(idx, unitary_step(h, dt)):
            psi = u @ psi
            if record_every and (k + 1) % record_every == 0:
                trace.append(psi.copy())
    logical = psi[1:, :] * np.exp(1j * phase) if psi.shape[1] == 2 else psi[1:, :]
    return EvolutionResult(psi, logical, phase, T, steps, schedule.name, tuple(trace))


def leakage(m: np.ndarray) -> float:
    """Population lost from the logical subspace, averaged over basis inputs."""
    m = np.asarray(m)
    return float(1.0 - np.sum(np.abs(m) ** 2) / m.shape[1])


def gate_fidelity(result, target: np.ndarray) -> float:
    """|tr(P^dagger M)| / 2 between the logical block M and target P.

    ``result`` may be an EvolutionResult or a bare 2x2 matrix. The absolute
    value makes the measure blind to a global phase.
    """
    m = result.logical if isinstance(result, EvolutionResult) else np.asarray(result)
    p = np.asarray(target)
    if m.shape != p.shape:
        raise ScheduleMismatchError(
            f"logical block {m.shape} does not match target {p.shape}")
    return float(abs(np.trace(p.conj().T @ m)) / p.shape[0])


def _scan_point(args):
    seq, alpha_t, dev, alpha, steps, target = args
    sched = compile_schedule(seq, alpha_t / alpha, dev, alpha)
    res = simulate(sched, steps=steps)
    return alpha_t, gate_fidelity(res, target), res.leakage


@dataclass(frozen=True)
class ScanResult:
    """Scan rows (alpha*T, fidelity, leakage) with log-log fit slopes."""

    rows: tuple
    infidelity_slope: float
    leakage_slope: float

    @property
    def monotone_leakage(self) -> bool:
        lk = [r[2] for r in self.rows]
        return all(b <= a for a, b in zip(lk, lk[1:]))

    def to_dict(self) -> dict:
        return {"columns": ["alpha_T", "fidelity", "leakage"],
                "rows": [list(r) for r in self.rows],
                "infidelity_loglog_slope": self.infidelity_slope,
                "leakage_loglog_slope": self.leakage_slope,
                "monotone_leakage": self.monotone_leakage}


def adiabaticity_scan(seq, target: np.ndarray, alpha_t_values, dev: DeviceParams,
                      alpha: float = 0.1, steps: int = DEFAULT_STEPS,
                      workers: int = 1) -> ScanResult:
    """Fidelity and leakage against total duration in units of 1/alpha.

    Slopes are least-squares fits of log(1 - F) and log(leakage) against
    log(alpha T).
    With ``workers`` > 1 points run in a process pool; results keep the
    input order.
    """
    vals = sorted(float(x) for x in alpha_t_values)
    jobs = [(seq, x, dev, alpha, steps, np.asarray(target)) for x in vals]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_scan_point, jobs))
    else:
        rows = [_scan_point(j) for j in jobs]
    return ScanResult(tuple(rows), _loglog_slope(rows, lambda r: 1.0 - r[1]),
                      _loglog_slope(rows, lambda r: r[2]))


def _loglog_slope(rows, value) -> float:
    if len(rows) < 2:
        return float("nan")
    x = np.log([r[0] for r in rows])
    y = np.log(np.maximum([value(r) for r in rows], 1e-300))
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class MeasurementResult:
    probabilities: dict
    counts: dict
    left_island_bits: np.ndarray

    def to_dict(self) -> dict:
        return {"probabilities": self.probabilities, "counts": self.counts,
                "left_island_ones": int(self.left_island_bits.sum()),
                "shots": int(self.left_island_bits.size)}


def measure_charge(psi, shots: int = 1000, seed: int | None = None) -> MeasurementResult:
    """Projective charge readout of a 3-component state by the Born rule.

    Each shot also yields the left-island bit n1 = (n + m) / 2 of the
    outcome, which is what a single-island electrometer sees.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.shape != (3,):
        raise ValidationError("expected a 3-component state (|a>, |0>, |1>)")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-6:
        raise ValidationError(f"state not normalized (norm={norm:.6g})")
    p = np.abs(psi) ** 2
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(3, size=shots, p=p)
    counts = {lab: int(np.sum(outcomes == i)) for i, lab in enumerate(STATE_LABELS)}
    bits = np.asarray(LEFT_ISLAND_BITS)[outcomes]
    return MeasurementResult({lab: float(x) for lab, x in zip(STATE_LABELS, p)}, counts, bits)
