"""Ground-state charge stability diagram of the double island.

Colours each point of the (n_gs, n_gd) plane by the charge configuration
minimizing the electrostatic energy and marks the triple points.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from holoqc.cli import dumps, triple_points  # noqa: E402
from holoqc.device import DeviceParams, polygons_to_csv, stability_polygons  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/stability")
    ap.add_argument("--k", type=float, default=1 / 3)
    ap.add_argument("--window", default="-0.5,3.5,-1.5,1.5",
                    help="n_gs_min,n_gs_max,n_gd_min,n_gd_max")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    window = tuple(float(x) for x in args.window.split(","))
    cells = stability_polygons(DeviceParams(k=args.k), window)
    (out / "stability.csv").write_text(polygons_to_csv(cells))
    tps = triple_points(cells)
    (out / "triple_points.json").write_text(dumps({"k": args.k, "triple_points": tps}) + "\n")

    fig, ax = plt.subplots(figsize=(6, 5))
    cmap = plt.get_cmap("tab20")
    for i, (state, verts) in enumerate(sorted(cells.items())):
        ax.add_patch(Polygon(verts, closed=True, fc=cmap(i % 20), ec="k", lw=0.5))
        cx = sum(v[0] for v in verts) / len(verts)
        cy = sum(v[1] for v in verts) / len(verts)
        ax.text(cx, cy, f"({state.n},{state.m})", ha="center", va="center", fontsize=7)
    ax.plot([p[0] for p in tps], [p[1] for p in tps], "k.", ms=4)
    ax.set_xlim(window[0], window[1])
    ax.set_ylim(window[2], window[3])
    ax.set_xlabel("n_gs")
    ax.set_ylabel("n_gd")
    fig.tight_layout()
    fig.savefig(out / "stability.png", dpi=120)
    print(f"{len(cells)} charge cells, {len(tps)} triple points")


if __name__ == "__main__":
    main()
