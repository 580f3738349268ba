"""Ground-state holonomic gates in a two-island superconducting circuit."""

from .device import DeviceParams, compile_schedule, map_to_physical
from .dynamics import gate_fidelity, simulate
from .loops import GateSequence, compose, hadamard_loop, phase_gate_sequence, u2_loop
from .model import ModelParams, ParamPath, holonomy, transport
from .twoqubit import CouplingParams, controlled_phase, two_qubit_protocol

__all__ = [
    "CouplingParams", "DeviceParams", "GateSequence", "ModelParams", "ParamPath",
    "compile_schedule", "compose", "controlled_phase", "gate_fidelity", "hadamard_loop",
    "holonomy", "map_to_physical", "phase_gate_sequence", "simulate", "transport",
    "two_qubit_protocol", "u2_loop",
]
