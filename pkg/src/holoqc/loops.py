"""Named gate loops and sequences of loops in (theta1, theta2, phi2) space."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import ParamPath, PathContractError, holonomy

HALF_PI = np.pi / 2


def hadamard_loop() -> ParamPath:
    """Trapezoid (0,0) -> (0,pi/6) -> (pi/2,pi/6) -> (pi/2,0) -> (0,0) at phi2 = 0."""
    pts = [(0, 0), (0, np.pi / 6), (HALF_PI, np.pi / 6), (HALF_PI, 0), (0, 0)]
    return ParamPath.from_points(pts, 0.0, name="hadamard")


def u2_loop(phi2: float) -> ParamPath:
    """(0,0) -> (pi/2,0) -> (pi/2,pi/2) -> (0,pi/2) -> (0,0) at constant phi2.

    All three SQUIDs stay closed on the third edge, so it is flagged as
    physically irrelevant.
    """
    pts = [(0, 0), (HALF_PI, 0), (HALF_PI, HALF_PI), (0, HALF_PI), (0, 0)]
    return ParamPath.from_points(pts, phi2, irrelevant=(False, False, True, False),
                                 name=f"u2({phi2:.17g})")


def rectangle_loop(theta1_min: float, theta1_max: float, theta2_min: float,
                   theta2_max: float, phi2: float = 0.0) -> ParamPath:
    """Rectangle traversed with theta1 increasing first, then theta2.

    Starts at (theta1_min, theta2_min); this is the orientation assumed by
    ``model.rectangle_closed_form``.
    """
    pts = [(theta1_min, theta2_min), (theta1_max, theta2_min),
           (theta1_max, theta2_max), (theta1_min, theta2_max), (theta1_min, theta2_min)]
    return ParamPath.from_points(pts, phi2, name="rectangle")


def _at_origin(w: np.ndarray, tol: float = 1e-12) -> bool:
    return abs(w[0]) <= tol and abs(w[1]) <= tol


@dataclass(frozen=True)
class GateSequence:
    """Loops applied in list order (first loop acts first).

    Consecutive loops may only meet where all SQUIDs are closed,
    theta1 = theta2 = 0, which is the only place phi2 may jump.
    """

    loops: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(self.loops))

    @property
    def phi2_values(self) -> list[float]:
        return [float(lp.waypoints[0, 2]) for lp in self.loops]

    def check_junctions(self):
        for k, lp in enumerate(self.loops):
            if not lp.is_loop:
                raise PathContractError(f"member {k} ({lp.name}) is not a closed loop")
        for k in range(len(self.loops) - 1):
            end, start = self.loops[k].waypoints[-1], self.loops[k + 1].waypoints[0]
            if np.allclose(end, start, atol=1e-12):
                continue
            if not (_at_origin(end) and _at_origin(start)):
                raise PathContractError(
                    f"loops {k} and {k + 1} meet at theta=({end[0]:.3g}, {end[1]:.3g}) "
                    f"-> ({start[0]:.3g}, {start[1]:.3g}); phi2 may only change where "
                    "theta1 = theta2 = 0")

    def __add__(self, other: "GateSequence") -> "GateSequence":
        return GateSequence(self.loops + other.loops,
                            name="*".join(x for x in (other.name, self.name) if x))

    def to_dict(self) -> dict:
        return {"name": self.name,
                "phi2": self.phi2_values,
                "loops": [lp.to_dict() for lp in self.loops]}

    @classmethod
    def from_dict(cls, d: dict) -> "GateSequence":
        return cls(tuple(ParamPath.from_dict(x) for x in d["loops"]), d.get("name", ""))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GateSequence":
        return cls.from_dict(json.loads(text))


def phase_gate_sequence(phi2: float) -> GateSequence:
    """U2(phi2) followed by U2(-phi2); the product is -diag(e^{-2i phi2}, e^{2i phi2})."""
    return GateSequence((u2_loop(phi2), u2_loop(-phi2)), name=f"phase({phi2:.17g})")


def compose(seq: GateSequence, steps: int = 4096) -> np.ndarray:
    seq.check_junctions()
    u = np.eye(2, dtype=complex)
    for lp in seq.loops:
        u = holonomy(lp, steps) @ u
    return u


def gate_sequence(name: str, phi2: float = 0.0) -> GateSequence:
    """Look up a named single-qubit gate: ``hadamard``, ``u2`` or ``phase``."""
    if name == "hadamard":
        return GateSequence((hadamard_loop(),), name="hadamard")
    if name == "u2":
        return GateSequence((u2_loop(phi2),), name=f"u2({phi2:.17g})")
    if name == "phase":
        return phase_gate_sequence(phi2)
    raise KeyError(f"unknown gate {name!r}; expected hadamard, u2 or phase")


GATE_NAMES = ("hadamard", "u2", "phase")
