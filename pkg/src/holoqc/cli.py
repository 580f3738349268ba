"""Command-line front end: ``holoqc <command> [--config file.json] [flags]``.

Every command writes JSON (and CSV where tabular) into the output
directory: ``--out`` if given, else ``$HOLOQC_OUT``, else the config's
``output.dir``, else ``./holoqc_out``. Exit codes: 0 success, 2 bad
configuration, 3 numerical or contract failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import device, dynamics, loops, model, numerics, twoqubit

OUT_ENV = "HOLOQC_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


# -- deterministic JSON --------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits.

    numpy scalars and arrays are converted; complex numbers become
    {"re": ..., "im": ...}. Key order is preserved, so output depends only
    on the data.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps({"re": obj.real, "im": obj.imag}, indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def matrix_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    k: float = 1.0 / 3.0
    Ec_tilde: float = 1.0
    gate: str = "hadamard"
    phi2: float = 0.0
    alpha: float = 0.1
    alpha_t: tuple = (200.0,)
    steps: int = dynamics.DEFAULT_STEPS
    holonomy_steps: int = 4096
    samples: int = 64
    delta_phi2: float = np.pi / 8
    twoqubit_mode: str = "geometric"
    window: tuple = (0.5, 2.5, -1.5, 1.5)
    state: tuple = (0.0, 1.0, 0.0)
    shots: int = 1000
    seed: int = 0
    workers: int = 1
    out_dir: str = "holoqc_out"
    extra: dict = field(default_factory=dict, compare=False)

    def validate(self) -> "ExperimentConfig":
        if not 0 < self.k <= 1:
            raise ConfigError(f"k must lie in (0, 1], got {self.k}")
        if not self.Ec_tilde > 0:
            raise ConfigError("Ec_tilde must be positive")
        if self.gate not in loops.GATE_NAMES:
            raise ConfigError(f"unknown gate {self.gate!r}; choose from {loops.GATE_NAMES}")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not self.alpha_t or any(not x > 0 for x in self.alpha_t):
            raise ConfigError("alpha_t values (T_ad in units of hbar/alpha) must be positive")
        for name in ("steps", "holonomy_steps", "samples", "shots", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.twoqubit_mode not in ("geometric", "dynamic"):
            raise ConfigError("twoqubit mode must be geometric or dynamic")
        if len(self.window) != 4 or self.window[0] >= self.window[1] \
                or self.window[2] >= self.window[3]:
            raise ConfigError("window must be ngs_min ngs_max ngd_min ngd_max")
        if len(self.state) != 3:
            raise ConfigError("state needs three amplitudes (a, 0, 1)")
        return self

    @property
    def dev(self) -> device.DeviceParams:
        return device.DeviceParams(self.k, self.Ec_tilde)


_CONFIG_KEYS = {
    ("device", "k"): "k", ("device", "Ec_tilde"): "Ec_tilde",
    ("gate", "name"): "gate", ("gate", "phi2"): "phi2",
    ("schedule", "alpha"): "alpha", ("schedule", "alpha_T"): "alpha_t",
    ("schedule", "steps"): "steps", ("schedule", "holonomy_steps"): "holonomy_steps",
    ("schedule", "samples"): "samples",
    ("twoqubit", "delta_phi2"): "delta_phi2", ("twoqubit", "mode"): "twoqubit_mode",
    ("stability", "window"): "window",
    ("measure", "state"): "state", ("measure", "shots"): "shots",
    ("output", "dir"): "out_dir",
}


def load_config(path: str | None) -> dict:
    """Flatten a nested JSON config into ExperimentConfig field values."""
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    out = {}
    for key, val in raw.items():
        if key in ("seed", "workers"):
            out[key] = val
            continue
        if not isinstance(val, dict):
            raise ConfigError(f"config section {key!r} must be an object")
        for sub, v in val.items():
            name = _CONFIG_KEYS.get((key, sub))
            if name is None:
                raise ConfigError(f"unknown config key {key}.{sub}")
            out[name] = v
    return out


def _coerce(values: dict) -> dict:
    out = dict(values)
    try:
        for name in ("alpha_t", "window", "state"):
            if name in out:
                v = out[name]
                out[name] = tuple(float(x) for x in (v if isinstance(v, (list, tuple)) else [v]))
        for name in ("k", "Ec_tilde", "phi2", "alpha", "delta_phi2"):
            if name in out:
                out[name] = float(out[name])
        for name in ("steps", "holonomy_steps", "samples", "shots", "seed", "workers"):
            if name in out:
                out[name] = int(out[name])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return out


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config(getattr(args, "config", None))
    if os.environ.get(OUT_ENV):
        values["out_dir"] = os.environ[OUT_ENV]
    for name in ("k", "Ec_tilde", "gate", "phi2", "alpha", "alpha_t", "steps",
                 "holonomy_steps", "samples", "delta_phi2", "twoqubit_mode", "window",
                 "state", "shots", "seed", "workers", "out_dir"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return replace(ExperimentConfig(), **_coerce(values)).validate()


# -- commands -----------------------------------------------------------------------

def _write(cfg: ExperimentConfig, name: str, text: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _sequence(cfg: ExperimentConfig) -> loops.GateSequence:
    return loops.gate_sequence(cfg.gate, cfg.phi2)


def _stem(cfg: ExperimentConfig) -> str:
    return cfg.gate if cfg.gate == "hadamard" else f"{cfg.gate}_phi2_{cfg.phi2:.6g}"


def cmd_holonomy(cfg: ExperimentConfig) -> list[Path]:
    seq = _sequence(cfg)
    u = loops.compose(seq, cfg.holonomy_steps)
    u_half = loops.compose(seq, max(1, cfg.holonomy_steps // 2))
    report = {
        "gate": cfg.gate, "phi2": cfg.phi2, "steps_per_segment": cfg.holonomy_steps,
        "matrix": matrix_json(u),
        "convergence": {"max_diff_vs_half_steps": float(np.max(np.abs(u - u_half))),
                        "unitarity_error": numerics.unitarity_error(u)},
    }
    return [_write(cfg, f"holonomy_{_stem(cfg)}.json", dumps(report) + "\n")]


def cmd_schedule(cfg: ExperimentConfig) -> list[Path]:
    sched = device.compile_schedule(_sequence(cfg), cfg.alpha_t[0] / cfg.alpha, cfg.dev, cfg.alpha)
    d = sched.to_dict(cfg.samples)
    if d["spectrum_check"] != "pass":
        raise numerics.ValidationError("compiled schedule failed the spectrum check")
    stem = f"schedule_{_stem(cfg)}"
    return [_write(cfg, stem + ".json", dumps(d) + "\n"),
            _write(cfg, stem + ".csv", sched.to_csv(cfg.samples))]


def cmd_simulate(cfg: ExperimentConfig) -> list[Path]:
    seq = _sequence(cfg)
    sched = device.compile_schedule(seq, cfg.alpha_t[0] / cfg.alpha, cfg.dev, cfg.alpha)
    every = max(1, cfg.steps // 512)
    res = dynamics.simulate(sched, steps=cfg.steps, record_every=every)
    target = loops.compose(seq, cfg.holonomy_steps)
    report = {
        "gate": cfg.gate, "phi2": cfg.phi2, "alpha": cfg.alpha, "alpha_T": cfg.alpha_t[0],
        "duration": sched.duration, "steps": cfg.steps,
        "fidelity": dynamics.gate_fidelity(res, target), "leakage": res.leakage,
        "logical": matrix_json(res.logical), "holonomy": matrix_json(target),
        "final_states": matrix_json(res.states),
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "input", "p_a", "p_0", "p_1"])
    dt = sched.duration / cfg.steps
    for j, psi in enumerate(res.trace):
        for col, lab in enumerate(("0", "1")):
            p = np.abs(psi[:, col]) ** 2
            w.writerow([f"{j * every * dt:.17g}", lab] + [f"{x:.17g}" for x in p])
    stem = f"simulate_{_stem(cfg)}"
    return [_write(cfg, stem + ".json", dumps(report) + "\n"),
            _write(cfg, stem + "_populations.csv", buf.getvalue())]


def cmd_scan(cfg: ExperimentConfig) -> list[Path]:
    seq = _sequence(cfg)
    target = loops.compose(seq, cfg.holonomy_steps)
    res = dynamics.adiabaticity_scan(seq, target, cfg.alpha_t, cfg.dev, cfg.alpha,
                                     cfg.steps, cfg.workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha_T_over_hbar", "fidelity", "leakage"])
    for row in res.rows:
        w.writerow([f"{x:.17g}" for x in row])
    stem = f"scan_{_stem(cfg)}"
    report = {"gate": cfg.gate, "phi2": cfg.phi2, "alpha": cfg.alpha, "steps": cfg.steps}
    report.update(res.to_dict())
    return [_write(cfg, stem + ".json", dumps(report) + "\n"), _write(cfg, stem + ".csv", buf.getvalue())]


def triple_points(cells: dict, tol: float = 1e-9) -> list[tuple[float, float]]:
    """Polygon vertices shared by three or more cells."""
    groups: list = []  # [sum_x, sum_y, count, owners]
    for state, poly in cells.items():
        for x, y in poly:
            for g in groups:
                if abs(g[0] / g[2] - x) <= tol and abs(g[1] / g[2] - y) <= tol:
                    g[0] += x
                    g[1] += y
                    g[2] += 1
                    g[3].add(state)
                    break
            else:
                groups.append([x, y, 1, {state}])
    return sorted((g[0] / g[2], g[1] / g[2]) for g in groups if len(g[3]) >= 3)


def cmd_stability(cfg: ExperimentConfig) -> list[Path]:
    cells = device.stability_polygons(cfg.dev, cfg.window)
    report = {
        "k": cfg.k, "window": list(cfg.window),
        "cells": [{"n": s.n, "m": s.m, "vertices": [list(v) for v in cells[s]]}
                  for s in sorted(cells)],
        "triple_points": [list(p) for p in triple_points(cells)],
    }
    return [_write(cfg, "stability.json", dumps(report) + "\n"),
            _write(cfg, "stability.csv", device.polygons_to_csv(cells))]


def cmd_twoqubit(cfg: ExperimentConfig) -> list[Path]:
    coupling = twoqubit.CouplingParams.for_delta(cfg.delta_phi2, cfg.alpha)
    res = twoqubit.two_qubit_protocol(coupling, cfg.dev, mode=cfg.twoqubit_mode,
                                      alpha_t=cfg.alpha_t[0])
    report = {"coupling_M": coupling.M, "alpha": cfg.alpha}
    report.update(res.to_dict())
    return [_write(cfg, f"twoqubit_{cfg.twoqubit_mode}.json", dumps(report) + "\n")]


def cmd_measure(cfg: ExperimentConfig) -> list[Path]:
    psi = np.asarray(cfg.state, dtype=complex)
    res = dynamics.measure_charge(psi, cfg.shots, cfg.seed)
    report = {"state": list(cfg.state), "seed": cfg.seed}
    report.update(res.to_dict())
    return [_write(cfg, "measure.json", dumps(report) + "\n")]


COMMANDS = {
    "holonomy": cmd_holonomy, "schedule": cmd_schedule, "simulate": cmd_simulate,
    "scan": cmd_scan, "stability": cmd_stability, "twoqubit": cmd_twoqubit,
    "measure": cmd_measure,
}

NUMERIC_ERRORS = (numerics.ValidationError, numerics.ConvergenceError,
                  model.PathContractError, device.UnmappableEdgeError, device.ScheduleError,
                  twoqubit.PerturbativeBoundError, dynamics.ScheduleMismatchError,
                  FloatingPointError, np.linalg.LinAlgError)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holoqc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", dest="out_dir", help=f"output directory (overrides ${OUT_ENV})")
    common.add_argument("--k", type=float)
    common.add_argument("--Ec-tilde", dest="Ec_tilde", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    gate = argparse.ArgumentParser(add_help=False)
    gate.add_argument("--gate")
    gate.add_argument("--phi2", type=float)
    gate.add_argument("--holonomy-steps", dest="holonomy_steps", type=int)
    sched = argparse.ArgumentParser(add_help=False)
    sched.add_argument("--alpha", type=float)
    sched.add_argument("--alpha-t", dest="alpha_t", type=_floats,
                       help="T_ad in units of hbar/alpha; scan accepts a list")
    sched.add_argument("--steps", type=int)
    sched.add_argument("--samples", type=int)

    sub.add_parser("holonomy", parents=[common, gate], help="geometric gate of a loop")
    sub.add_parser("schedule", parents=[common, gate, sched], help="device control traces")
    sub.add_parser("simulate", parents=[common, gate, sched], help="time evolution and fidelity")
    sub.add_parser("scan", parents=[common, gate, sched], help="fidelity and leakage vs duration")
    p = sub.add_parser("stability", parents=[common], help="charge stability polygons")
    p.add_argument("--window", type=_floats, help="ngs_min ngs_max ngd_min ngd_max")
    p = sub.add_parser("twoqubit", parents=[common, sched], help="controlled phase protocol")
    p.add_argument("--delta-phi2", dest="delta_phi2", type=float)
    p.add_argument("--mode", dest="twoqubit_mode", choices=("geometric", "dynamic"))
    p = sub.add_parser("measure", parents=[common], help="sample charge readout")
    p.add_argument("--state", type=_floats, help="real amplitudes of |a>, |0>, |1>")
    p.add_argument("--shots", type=int)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            paths = COMMANDS[args.command](cfg)
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
