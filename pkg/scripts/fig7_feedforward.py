"""Feed-forward receiver ratios to heterodyne and their crossing distances."""

import argparse
import csv

import numpy as np

from qpsk_kgr.optimizer import crossing_distance, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--copies", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--d-max", type=float, default=40.0)
    ap.add_argument("--d-step", type=float, default=0.5)
    ap.add_argument("--out", default="fig7_feedforward.csv")
    args = ap.parse_args()

    tags = [f"ff:{n}" for n in args.copies]
    res = sweep(np.arange(0.0, args.d_max + 1e-9, args.d_step), tags + ["pgm"])
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", *(f"R_{t}" for t in tags), "R_pgm"])
        for i, d in enumerate(res.distances):
            w.writerow([f"{d:.12g}", *(f"{res.ratio(t)[i]:.12g}" for t in tags + ["pgm"])])
    for t in tags:
        r = res.ratio(t)
        print(f"{t:>6}: max ratio {np.nanmax(r):.4f}, falls below heterodyne at {crossing_distance(res.distances, r):.2f} km")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
