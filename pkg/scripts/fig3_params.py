"""Optimal KOR phases and modulation energies versus distance."""

import argparse
import csv
import math

import numpy as np

from qpsk_kgr.constellation import transmissivity
from qpsk_kgr.optimizer import get_budget, maximize_het, maximize_kor, maximize_pgm
from qpsk_kgr.receivers import phase_distance

PLATEAU = (0.0, math.pi / 2, math.pi, math.pi / 2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d-max", type=float, default=150.0)
    ap.add_argument("--d-step", type=float, default=2.0)
    ap.add_argument("--budget", default="default")
    ap.add_argument("--out", default="fig3_params.csv")
    args = ap.parse_args()

    budget = get_budget(args.budget)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "phi1", "phi2", "phi3", "alpha2_kor", "alpha2_pgm", "alpha2_het"])
        for d in np.arange(0.0, args.d_max + 1e-9, args.d_step):
            T = transmissivity(d)
            kor = maximize_kor(T, budget=budget)
            pgm = maximize_pgm(T, budget=budget)
            het = maximize_het(T, budget=budget)
            w.writerow([f"{v:.12g}" for v in (d, *kor.phases[1:], kor.alpha2, pgm.alpha2, het.alpha2)])
            regime = "pgm" if phase_distance(kor.phases, (0, 0, 0, 0)) < 0.05 else (
                "plateau" if phase_distance(kor.phases, PLATEAU) < 0.05 else "transition")
            print(f"{d:6.1f} km  phases {np.round(kor.phases, 3)}  ({regime})  "
                  f"alpha2 kor {kor.alpha2:.3f} pgm {pgm.alpha2:.3f} het {het.alpha2:.3f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
