"""Wigner maps of the PGM and KOR reference measurement vectors at 30 and 100 km."""

import argparse
import math

import numpy as np

from qpsk_kgr.constellation import gram_matrix, make_constellation, transmissivity
from qpsk_kgr.phase_space import default_axis, symmetry_report, wigner_map
from qpsk_kgr.receivers import ReceiverSpec, reference_vector_fock

SPECS = {"pgm": ReceiverSpec.pgm(), "kor": ReceiverSpec((0.0, math.pi / 2, math.pi, math.pi / 2))}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha2", type=float, default=1.0)
    ap.add_argument("--extent", type=float, default=6.0)
    ap.add_argument("--nodes", type=int, default=241)
    ap.add_argument("--prefix", default="fig5_wigner")
    args = ap.parse_args()

    axis = default_axis(args.extent, args.nodes)
    c = make_constellation(4, args.alpha2)
    for d in (30, 100):
        T = transmissivity(d)
        g = gram_matrix(c, T)
        maps = {}
        for name, spec in SPECS.items():
            fv = reference_vector_fock(spec, g, math.sqrt(T) * c.amplitudes[0])
            wm = wigner_map(fv, axis)
            maps[name] = wm
            rep = symmetry_report(wm)
            path = f"{args.prefix}_{name}_{d}km.csv"
            X, Y = np.meshgrid(axis, axis, indexing="ij")
            np.savetxt(path, np.c_[X.ravel(), Y.ravel(), wm.values.ravel()], delimiter=",",
                       header="x,y,W", comments="", fmt="%.12g")
            peaks = "; ".join(f"({x:.2f}, {y:.2f}) {h:.3f}" for x, y, h in rep["peaks"])
            print(f"{d} km {name}: min W {wm.min_value:.4f}, height spread {rep['height_spread']:.2f}, peaks {peaks}")
        diff = np.abs(maps["pgm"].values - maps["kor"].values).max()
        print(f"{d} km: max |W_pgm - W_kor| = {diff:.4f}")


if __name__ == "__main__":
    main()
