"""Write the gate-charge and coupling traces of the Hadamard and U2 schedules.

Produces one CSV per gate (columns t, n_gs, n_gd, E_L, E_m, E_R, phi) plus a
PNG with the six control traces stacked, for k = 1/3 and alpha = 0.1.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from holoqc.device import CSV_COLUMNS, DeviceParams, compile_schedule  # noqa: E402
from holoqc.loops import gate_sequence  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/schedules")
    ap.add_argument("--phi2", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--samples", type=int, default=100, help="samples per segment")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dev = DeviceParams(k=1 / 3)
    fig, axes = plt.subplots(len(CSV_COLUMNS) - 1, 2, figsize=(10, 10), sharex="col")
    for col, (name, phi2) in enumerate((("hadamard", 0.0), ("u2", args.phi2))):
        sched = compile_schedule(gate_sequence(name, phi2), 1.0, dev, args.alpha, name=name)
        (out / f"{name}.csv").write_text(sched.to_csv(args.samples))
        t = sched.sample_times(args.samples)
        for row, (key, trace) in enumerate(zip(CSV_COLUMNS[1:], sched.control_arrays(t))):
            axes[row, col].plot(t, trace)
            axes[row, col].set_ylabel(key)
        axes[0, col].set_title(name if name == "hadamard" else f"{name}, phi2={phi2:g}")
        axes[-1, col].set_xlabel("t / T_ad")
        print(f"{name}: max spectrum error {np.max(sched.spectrum_errors(t)):.2e}")
    fig.tight_layout()
    fig.savefig(out / "schedules.png", dpi=120)


if __name__ == "__main__":
    main()
