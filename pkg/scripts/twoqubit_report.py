"""Controlled-phase gate from two inductively coupled qubits.

Sweeps the induced phase shift, runs the geometric protocol for each value
and the time-dependent protocol for one, and writes a JSON report.
"""

import argparse
from pathlib import Path

import numpy as np

from holoqc.cli import dumps
from holoqc.device import DeviceParams
from holoqc.model import ModelParams
from holoqc.twoqubit import (CouplingParams, eq18_vs_physical, self_inductance_check,
                             two_qubit_protocol)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/twoqubit")
    ap.add_argument("--alpha-t", type=float, default=200.0, help="per segment")
    ap.add_argument("--skip-dynamic", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dev = DeviceParams(k=1 / 3)
    report = {"geometric": []}
    for delta in np.linspace(-np.pi / 4, np.pi / 4, 9):
        res = two_qubit_protocol(CouplingParams.for_delta(delta), dev, mode="geometric")
        report["geometric"].append({"delta_phi2": delta, "error": res.error,
                                    "fidelity": res.fidelity})
        print(f"geometric delta={delta:+.4f}  error={res.error:.2e}")
    if not args.skip_dynamic:
        res = two_qubit_protocol(CouplingParams.for_delta(np.pi / 8), dev, mode="dynamic",
                                 alpha_t=args.alpha_t)
        report["dynamic"] = res.to_dict()
        print(f"dynamic delta=pi/8 alpha*T={args.alpha_t:g}  error={res.error:.3e}  "
              f"F={res.fidelity:.6f}")
    p = ModelParams(0.0, 0.1, np.pi / 4, np.pi / 4, 0.0)
    report["self_inductance"] = self_inductance_check(p, 0.5)
    report["linear_response_vs_device"] = [
        {"phi1": x, "error": eq18_vs_physical(p, x, dev)} for x in (0.01, 0.02, 0.04, 0.08)]
    (out / "twoqubit.json").write_text(dumps(report) + "\n")


if __name__ == "__main__":
    main()
