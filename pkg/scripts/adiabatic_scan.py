"""Fidelity and leakage of the compiled single-qubit gates against alpha*T.

Writes scan_<gate>.json / .csv and a log-log leakage plot.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from holoqc.cli import dumps  # noqa: E402
from holoqc.device import DeviceParams  # noqa: E402
from holoqc.dynamics import adiabaticity_scan  # noqa: E402
from holoqc.loops import compose, gate_sequence  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/scan")
    ap.add_argument("--alpha-t", default="25,50,100,200,400")
    ap.add_argument("--phi2", type=float, default=0.5)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ladder = [float(x) for x in args.alpha_t.split(",")]
    dev = DeviceParams(k=1 / 3)
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, phi2 in (("hadamard", 0.0), ("u2", args.phi2), ("phase", args.phi2)):
        seq = gate_sequence(name, phi2)
        scan = adiabaticity_scan(seq, compose(seq), ladder, dev, workers=args.workers)
        (out / f"scan_{name}.json").write_text(dumps(scan.to_dict()) + "\n")
        lines = ["alpha_T,fidelity,leakage"] + [f"{a:.17g},{f:.17g},{lk:.17g}"
                                                for a, f, lk in scan.rows]
        (out / f"scan_{name}.csv").write_text("\n".join(lines) + "\n")
        ax.loglog([r[0] for r in scan.rows], [r[2] for r in scan.rows], "o-",
                  label=f"{name} (slope {scan.leakage_slope:.2f})")
        for a, f, lk in scan.rows:
            print(f"{name:9s} alpha*T={a:6g}  F={f:.6f}  leakage={lk:.3e}")
    ax.set_xlabel("alpha T")
    ax.set_ylabel("leakage")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "leakage.png", dpi=120)


if __name__ == "__main__":
    main()
