"""Three-SQUID / two-island device: charge lattice, truncation and schedules.

Charge states are labelled by (n, m) = (n1 + n2, n1 - n2). The working
states near the triple point are |a> = (1, 1), |0> = (1, -1), |1> = (2, 0).

Sign conventions (frozen; see README):

* ``E_L`` and ``E_R`` carry the Josephson energies of the outer SQUIDs and
  are non-negative on the working quadrant 0 <= theta1, theta2 <= pi/2.
* ``E_m_J`` is the signed effective Josephson energy of the middle SQUID.
  The mapping drives it negative (a symmetric SQUID biased past half a flux
  quantum). With this sign the Hadamard loop is realized at phi = 0.
* Along edges where only the left SQUID is open the device phase is
  phi = -2 phi2; where only the right SQUID is open phi = +2 phi2. The
  phase is switched only at points where all three SQUIDs are closed.

With these choices the charge-basis gate produced by an adiabatic schedule
equals ``model.holonomy`` of the loop it was compiled from.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .loops import GateSequence
from .model import ModelParams, ParamPath, hamiltonians_match, model_hamiltonian

# Josephson energies below this (relative to alpha) count as a closed SQUID.
CLOSED_TOL = 1e-9
WORKING_STATES = ((1, 1), (1, -1), (2, 0))
CSV_COLUMNS = ("t", "n_gs", "n_gd", "E_L", "E_m", "E_R", "phi")


class UnmappableEdgeError(ValueError):
    """No phase-consistent physical realization exists for a path segment."""


class ScheduleError(ValueError):
    """A control schedule violates its invariants."""


@dataclass(frozen=True)
class DeviceParams:
    k: float = 1.0 / 3.0
    Ec_tilde: float = 1.0

    def __post_init__(self):
        if not 0 < self.k <= 1:
            raise ValueError(f"k must lie in (0, 1], got {self.k}")
        if not self.Ec_tilde > 0:
            raise ValueError("Ec_tilde must be positive")

    @property
    def triple_point(self) -> tuple[float, float]:
        return ((3.0 - self.k) / 2.0, 0.0)


@dataclass(frozen=True, order=True)
class ChargeState:
    n: int
    m: int

    def __post_init__(self):
        if (self.n + self.m) % 2:
            raise ValueError(f"(n, m) = ({self.n}, {self.m}): n + m must be even")

    @property
    def island_charges(self) -> tuple[int, int]:
        return ((self.n + self.m) // 2, (self.n - self.m) // 2)


@dataclass(frozen=True)
class PhysicalControls:
    n_gs: float
    n_gd: float
    E_L: float = 0.0
    E_m_J: float = 0.0
    E_R: float = 0.0
    phi: float = 0.0

    def all_closed(self, tol: float = CLOSED_TOL) -> bool:
        return max(abs(self.E_L), abs(self.E_m_J), abs(self.E_R)) <= tol

    def scaled(self, eps: float) -> "PhysicalControls":
        """Josephson energies multiplied by ``eps``; gate charges unchanged."""
        return PhysicalControls(self.n_gs, self.n_gd, eps * self.E_L, eps * self.E_m_J,
                                eps * self.E_R, self.phi)


# -- charging energy and stability diagram ---------------------------------

def charging_energy(s: ChargeState, n_gs: float, n_gd: float, dev: DeviceParams) -> float:
    return dev.Ec_tilde * ((s.n - n_gs) ** 2 + dev.k * (s.m - n_gd) ** 2)


def lattice_states(cutoff: int) -> list[ChargeState]:
    """All (n, m) with |n|, |m| <= cutoff and n + m even, sorted."""
    return [ChargeState(n, m) for n in range(-cutoff, cutoff + 1)
            for m in range(-cutoff, cutoff + 1) if (n + m) % 2 == 0]


def stability_cell(n_gs: float, n_gd: float, dev: DeviceParams, cutoff: int = 4,
                   tol: float = 1e-12) -> tuple[ChargeState, ...]:
    """Charge states minimizing the charging energy at (n_gs, n_gd).

    A single-element tuple inside a cell; two states on a cell edge and
    three at a triple point.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    states = lattice_states(cutoff)
    e = np.array([charging_energy(s, n_gs, n_gd, dev) for s in states])
    emin = e.min()
    return tuple(s for s, x in zip(states, e) if x - emin <= tol * max(1.0, abs(emin)))


def _clip(poly: list, a: float, b: float, c: float) -> list:
    """Keep the part of a convex polygon with a*x + b*y <= c."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _area(poly) -> float:
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def stability_polygons(dev: DeviceParams, window: Sequence[float],
                       cutoff: int | None = None) -> dict:
    """Honeycomb cells clipped to ``window = (ngs_min, ngs_max, ngd_min, ngd_max)``.

    Returns {ChargeState: [(n_gs, n_gd), ...]} with vertices in
    counter-clockwise order. Only cells of positive area are listed.
    """
    x0, x1, y0, y1 = map(float, window)
    if cutoff is None:
        cutoff = int(np.ceil(max(abs(x0), abs(x1), abs(y0), abs(y1)))) + 3
    states = lattice_states(cutoff)
    k = dev.k
    box = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    cells = {}
    for s in states:
        poly = box
        for t in states:
            if t == s:
                continue
            # E_s <= E_t  <=>  a x + b y <= c
            a = -2.0 * (s.n - t.n)
            b = -2.0 * k * (s.m - t.m)
            c = -(s.n**2 - t.n**2) - k * (s.m**2 - t.m**2)
            poly = _clip(poly, a, b, c)
            if len(poly) < 3:
                break
        if len(poly) >= 3 and _area(poly) > 1e-12:
            cells[s] = [(float(x), float(y)) for x, y in poly]
    return cells


def polygons_to_csv(cells: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "vertex", "n_gs", "n_gd"])
    for s in sorted(cells):
        for i, (x, y) in enumerate(cells[s]):
            w.writerow([s.n, s.m, i, f"{x:.17g}", f"{y:.17g}"])
    return buf.getvalue()


# -- Hamiltonians ------------------------------------------------------------

def lattice_hamiltonian(controls: PhysicalControls, dev: DeviceParams,
                        cutoff: int = 4) -> tuple[np.ndarray, list[ChargeState]]:
    """Charging plus Josephson Hamiltonian on the truncated charge lattice.

    Returns (matrix, basis); ``basis`` lists the ChargeState of each row.
    """
    if cutoff < 3:
        raise ValueError("cutoff must be >= 3 to contain the working states")
    basis = lattice_states(cutoff)
    index = {(s.n, s.m): i for i, s in enumerate(basis)}
    h = np.diag([charging_energy(s, controls.n_gs, controls.n_gd, dev)
                 for s in basis]).astype(complex)
    ph = np.exp(0.5j * controls.phi)
    hops = ((1, 1, -0.5 * controls.E_L * ph),
            (0, 2, -0.5 * controls.E_m_J),
            (1, -1, -0.5 * controls.E_R * np.conj(ph)))
    for s in basis:
        i = index[(s.n, s.m)]
        for dn, dm, amp in hops:
            j = index.get((s.n + dn, s.m + dm))
            if j is not None:
                h[j, i] += amp
                h[i, j] += np.conj(amp)
    return h, basis


def _truncated_stack(n_gs, n_gd, EL, Em, ER, phi, dev: DeviceParams) -> np.ndarray:
    n_gs, n_gd, EL, Em, ER, phi = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (n_gs, n_gd, EL, Em, ER, phi)))
    ec, k = dev.Ec_tilde, dev.k
    h = np.zeros(n_gs.shape + (3, 3), dtype=complex)
    h[..., 0, 0] = ec * ((1 - n_gs) ** 2 + k * (1 - n_gd) ** 2)
    h[..., 1, 1] = ec * ((1 - n_gs) ** 2 + k * (1 + n_gd) ** 2)
    h[..., 2, 2] = ec * ((2 - n_gs) ** 2 + k * n_gd**2)
    ph = np.exp(0.5j * phi)
    h[..., 0, 1] = h[..., 1, 0] = -0.5 * Em
    h[..., 0, 2] = -0.5 * ER * ph
    h[..., 2, 0] = -0.5 * ER * np.conj(ph)
    h[..., 1, 2] = -0.5 * EL * np.conj(ph)
    h[..., 2, 1] = -0.5 * EL * ph
    return h


def truncated_hamiltonian(controls: PhysicalControls, dev: DeviceParams) -> np.ndarray:
    """3x3 Hamiltonian over (|a>, |0>, |1>) = ((1,1), (1,-1), (2,0))."""
    c = controls
    return _truncated_stack(c.n_gs, c.n_gd, c.E_L, c.E_m_J, c.E_R, c.phi, dev)


def current_operator(controls: PhysicalControls, dev: DeviceParams) -> np.ndarray:
    """Circulating-current operator 2 dH/d(phi1) in units of e E~_C / hbar.

    ``phi1`` is the model phase conjugate to the device phase; under the
    frozen convention phi = -2 phi1, so the operator is -4 dH/d(phi).
    """
    c = controls
    dh = np.zeros((3, 3), dtype=complex)
    ph = np.exp(0.5j * c.phi)
    dh[0, 2] = -0.25j * c.E_R * ph
    dh[1, 2] = 0.25j * c.E_L * np.conj(ph)
    dh[2, 0] = np.conj(dh[0, 2])
    dh[2, 1] = np.conj(dh[1, 2])
    return -4.0 * dh


# -- model <-> physical mapping ------------------------------------------------

def _mapped_arrays(theta1, theta2, alpha, dev: DeviceParams):
    c1, s1 = np.cos(theta1), np.sin(theta1)
    c2, s2 = np.cos(theta2), np.sin(theta2)
    ec, k = dev.Ec_tilde, dev.k
    n_gd = -alpha * np.cos(2 * theta1) * c2**2 / (4 * k * ec)
    n_gs = alpha * (3 * c2**2 - 2) / (4 * ec) + (3 - k) / 2
    EL = 2 * alpha * c2 * s1 * s2
    Em = -2 * alpha * c1 * c2**2 * s1
    ER = 2 * alpha * c1 * c2 * s2
    return n_gs, n_gd, EL, Em, ER


def mapped_eta(p: ModelParams, dev: DeviceParams) -> float:
    """Ground energy of the mapped physical Hamiltonian."""
    n_gs, n_gd, *_ = _mapped_arrays(p.theta1, p.theta2, p.alpha, dev)
    return float(dev.Ec_tilde * ((1 - n_gs) ** 2 + dev.k * (1 - n_gd) ** 2)
                 - p.alpha * np.cos(p.theta1) ** 2 * np.cos(p.theta2) ** 2)


def open_squids(p: ModelParams, tol: float = CLOSED_TOL) -> str:
    """'closed', 'm', 'L', 'R' or 'all' at a model control point."""
    _, _, EL, Em, ER = _mapped_arrays(p.theta1, p.theta2, 1.0, DeviceParams())
    op = tuple(abs(x) > tol for x in (EL, Em, ER))
    if all(op):
        return "all"
    if not any(op):
        return "closed"
    if sum(op) > 1:  # unreachable from the mapping, kept defensive
        return "all"
    return ("L", "m", "R")[op.index(True)]


def required_phase(p: ModelParams) -> float | None:
    """Device phase demanded at a control point, or None if phi is free."""
    kind = open_squids(p)
    if kind == "L":
        return -2.0 * p.phi2
    if kind == "R":
        return 2.0 * p.phi2
    if kind == "all":
        return 0.0
    return None


def _phase_matches(phi: float, target: float, tol: float = 1e-9) -> bool:
    # the Hamiltonian depends on exp(i phi / 2)
    return abs(np.exp(0.5j * (phi - target)) - 1.0) <= tol


def map_to_physical(p: ModelParams, dev: DeviceParams, phi: float | None = None
                    ) -> PhysicalControls:
    """Gate charges and Josephson energies reproducing the model spectrum.

    ``phi`` defaults to the phase demanded by the open SQUIDs. With all
    three SQUIDs open only phi = 0 (mod 4 pi) keeps the ground state
    degenerate, and only phi2 = 0 (mod 2 pi) can be matched; anything else
    raises UnmappableEdgeError.
    """
    n_gs, n_gd, EL, Em, ER = _mapped_arrays(p.theta1, p.theta2, p.alpha, dev)
    kind = open_squids(p)
    want = required_phase(p)
    if phi is None:
        phi = 0.0 if want is None else want
    if kind == "all":
        if not _phase_matches(p.phi2 * 2.0, 0.0):
            raise UnmappableEdgeError(
                f"all SQUIDs open at phi2 = {p.phi2:.6g}: the off-diagonal phases of "
                "the model cannot be matched by a single device phase")
        if not _phase_matches(phi, 0.0):
            raise UnmappableEdgeError(
                f"all SQUIDs open with phi = {phi:.6g}: the physical ground state is "
                "only degenerate at phi = 0")
    return PhysicalControls(float(n_gs), float(n_gd), float(EL), float(Em), float(ER),
                            float(phi))


# -- schedules ---------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleSegment:
    t0: float
    t1: float
    start: tuple  # (theta1, theta2, phi2)
    end: tuple
    phi: float
    kind: str


@dataclass(frozen=True)
class ScheduleEvent:
    t: float
    kind: str
    phi_before: float
    phi_after: float


@dataclass(frozen=True)
class ControlSchedule:
    """Time-dependent device controls compiled from model paths.

    Controls are evaluated exactly from the underlying straight segments, so
    the degeneracy holds at every instant, not only at exported samples.
    """

    dev: DeviceParams
    alpha: float
    segments: tuple
    events: tuple = ()
    name: str = ""
    alpha_profile: Callable[[float], float] | None = field(default=None, compare=False)

    @property
    def duration(self) -> float:
        return self.segments[-1].t1 if self.segments else 0.0

    def _alpha(self, t):
        if self.alpha_profile is None:
            return np.full(np.shape(t), self.alpha)
        s = np.asarray(t) / self.duration
        return np.vectorize(self.alpha_profile, otypes=[float])(s)

    def _locate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        starts = np.array([s.t0 for s in self.segments])
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.segments) - 1)
        a = np.array([self.segments[i].start for i in idx])
        b = np.array([self.segments[i].end for i in idx])
        t0 = np.array([self.segments[i].t0 for i in idx])
        t1 = np.array([self.segments[i].t1 for i in idx])
        frac = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
        x = a + frac[:, None] * (b - a)
        phi = np.array([self.segments[i].phi for i in idx])
        return x, phi, idx

    def control_arrays(self, t):
        """(n_gs, n_gd, E_L, E_m_J, E_R, phi) arrays at times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, phi, _ = self._locate(t)
        n_gs, n_gd, EL, Em, ER = _mapped_arrays(x[:, 0], x[:, 1], self._alpha(t), self.dev)
        return n_gs, n_gd, EL, Em, ER, phi

    def controls_at(self, t: float) -> PhysicalControls:
        vals = [float(v[0]) for v in self.control_arrays([t])]
        return PhysicalControls(*vals)

    def model_point(self, t: float) -> ModelParams:
        x, _, _ = self._locate([t])
        return ModelParams(0.0, float(self._alpha(np.array([t]))[0]), *map(float, x[0]))

    def hamiltonians(self, t) -> np.ndarray:
        return _truncated_stack(*self.control_arrays(t), self.dev)

    def sample_times(self, samples_per_segment: int = 64) -> np.ndarray:
        ts = []
        for seg in self.segments:
            ts.extend(np.linspace(seg.t0, seg.t1, samples_per_segment, endpoint=False))
        ts.append(self.duration)
        return np.array(ts)

    def spectrum_errors(self, t) -> np.ndarray:
        """Per time: max(|E1 - E0|, |E2 - E0 - alpha|) of the truncated Hamiltonian."""
        w = np.linalg.eigvalsh(self.hamiltonians(t))
        a = self._alpha(np.atleast_1d(t))
        return np.maximum(np.abs(w[:, 1] - w[:, 0]), np.abs(w[:, 2] - w[:, 0] - a))

    def validate(self):
        ts = np.array([s.t0 for s in self.segments] + [self.duration])
        if np.any(np.diff(ts) <= 0):
            raise ScheduleError("segment times must be strictly increasing")
        for ev in self.events:
            c = self.controls_at(ev.t)
            if not c.all_closed(CLOSED_TOL * max(1.0, self.alpha)):
                raise ScheduleError(f"{ev.kind} at t={ev.t:.6g} with a SQUID open")

    def to_dict(self, samples_per_segment: int = 64, tol: float = 1e-9) -> dict:
        ts = self.sample_times(samples_per_segment)
        arrs = self.control_arrays(ts)
        err = self.spectrum_errors(ts)
        rows = []
        for i, t in enumerate(ts):
            row = {"t": float(t)}
            for key, a in zip(CSV_COLUMNS[1:], arrs):
                row[key] = float(a[i])
            row["spectrum_ok"] = bool(err[i] <= tol)
            rows.append(row)
        return {
            "name": self.name,
            "units": {"energy": "Ec_tilde", "time": "hbar/Ec_tilde"},
            "device": {"k": self.dev.k, "Ec_tilde": self.dev.Ec_tilde},
            "alpha": self.alpha,
            "duration": self.duration,
            "columns": list(CSV_COLUMNS),
            "samples": rows,
            "events": [{"t": e.t, "kind": e.kind, "phi_before": e.phi_before,
                        "phi_after": e.phi_after} for e in self.events],
            "segments": [{"t0": s.t0, "t1": s.t1, "start": list(s.start),
                          "end": list(s.end), "phi": s.phi, "squids": s.kind}
                         for s in self.segments],
            "spectrum_check": "pass" if bool(np.all(err <= tol)) else "fail",
        }

    def to_csv(self, samples_per_segment: int = 64) -> str:
        ts = self.sample_times(samples_per_segment)
        arrs = self.control_arrays(ts)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, t in enumerate(ts):
            w.writerow([f"{t:.17g}"] + [f"{float(a[i]):.17g}" for a in arrs])
        return buf.getvalue()


def _segment_kind(a: np.ndarray, b: np.ndarray) -> str:
    kinds = {open_squids(ModelParams(0.0, 1.0, *(a + s * (b - a))))
             for s in np.linspace(0.05, 0.95, 7)}
    if "all" in kinds:
        return "all"
    kinds.discard("closed")
    if len(kinds) > 1:
        return "all"
    return kinds.pop() if kinds else "closed"


def _is_static(a: np.ndarray, b: np.ndarray) -> bool:
    h0 = model_hamiltonian(ModelParams(0.0, 1.0, *a))
    return all(np.max(np.abs(model_hamiltonian(ModelParams(0.0, 1.0, *(a + s * (b - a))))
                             - h0)) <= 1e-12 for s in np.linspace(0.0, 1.0, 9))


def _as_paths(obj) -> list[ParamPath]:
    if isinstance(obj, ParamPath):
        return [obj]
    if isinstance(obj, GateSequence):
        obj.check_junctions()
        return list(obj.loops)
    paths = []
    for x in obj:
        paths.extend(_as_paths(x))
    return paths


def compile_schedule(loop, T_ad: float, dev: DeviceParams, alpha: float = 0.1,
                     alpha_profile: Callable[[float], float] | None = None,
                     name: str = "", per_segment: bool = False) -> ControlSchedule:
    """Turn a path, loop or gate sequence into a physical control schedule.

    Each member path takes time ``T_ad``, split by its segment fractions.
    With ``per_segment`` every kept segment takes ``T_ad`` instead.
    Segments flagged irrelevant (or along which the Hamiltonian is
    constant) are skipped. The device phase follows the open SQUIDs; where
    it must change, a PhaseReversal event is placed at the junction, which
    has to be a point with all SQUIDs closed.
    """
    if not T_ad > 0:
        raise ValueError("T_ad must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    paths = _as_paths(loop)
    for p, q in zip(paths, paths[1:]):
        if not hamiltonians_match(p.waypoints[-1], q.waypoints[0]):
            raise UnmappableEdgeError(
                f"{p.name or 'path'} and {q.name or 'path'} do not join: the Hamiltonian jumps")

    plan = []  # (t0, t1, a, b, required phi or None, kind)
    t = 0.0
    for path in paths:
        keep = [i for i, (a, b) in enumerate(path.segments())
                if not path.irrelevant[i] and not _is_static(a, b)]
        if not keep:
            continue
        total = sum(path.segment_fractions[i] for i in keep)
        for i in keep:
            a, b = path.waypoints[i], path.waypoints[i + 1]
            dt = T_ad if per_segment else T_ad * path.segment_fractions[i] / total
            kind = _segment_kind(a, b)
            need = None
            if kind in ("L", "R", "all"):
                if abs(b[2] - a[2]) > 1e-12:
                    raise UnmappableEdgeError(
                        f"phi2 varies on a segment with the {kind} SQUID(s) open")
                if kind == "all" and not _phase_matches(2.0 * a[2], 0.0):
                    raise UnmappableEdgeError(
                        f"segment {tuple(np.round(a[:2], 4))} -> {tuple(np.round(b[:2], 4))} "
                        f"opens all SQUIDs at phi2 = {a[2]:.6g}; the phases cannot be matched")
                need = {"L": -2.0 * a[2], "R": 2.0 * a[2], "all": 0.0}[kind]
            plan.append((t, t + dt, a, b, need, kind))
            t += dt
    if not plan:
        raise UnmappableEdgeError("path contains no segment that changes the Hamiltonian")

    phi = next((x[4] for x in plan if x[4] is not None), 0.0)
    segments, events = [], []
    for t0, t1, a, b, need, kind in plan:
        if need is not None and not _phase_matches(phi, need):
            corner = ModelParams(0.0, 1.0, *a)
            if open_squids(corner) != "closed":
                raise UnmappableEdgeError(
                    f"device phase must change from {phi:.6g} to {need:.6g} at "
                    f"theta=({a[0]:.4g}, {a[1]:.4g}) where a SQUID is open")
            events.append(ScheduleEvent(float(t0), "PhaseReversal", float(phi), float(need)))
            phi = need
        segments.append(ScheduleSegment(float(t0), float(t1), tuple(map(float, a)),
                                        tuple(map(float, b)), float(phi), kind))
    sched = ControlSchedule(dev, float(alpha), tuple(segments), tuple(events),
                            name=name or "+".join(p.name for p in paths if p.name),
                            alpha_profile=alpha_profile)
    sched.validate()
    return sched
