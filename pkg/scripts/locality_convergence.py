"""Relative mixed-contraction residual against rapidity-grid size.

Prints CSV: case, theta_max, n_nodes, residual, control, contour_gap.
"""
import argparse
import csv
import sys

from warpfock.geometry import ThetaMatrix
from warpfock.locality import commutator_residual
from warpfock.suites import LOCALITY_CASES
from warpfock.testfunctions import TestFunction, rapidity_grid
from warpfock.unitaries import Identity


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta-max", type=float, nargs="+", default=[4.0, 5.0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[32, 64, 128, 256, 512])
    args = ap.parse_args(argv)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["case", "theta_max", "n_nodes", "residual", "control", "contour_gap"])
    for k, (cf, hf, cg, hg, lam, z) in enumerate(LOCALITY_CASES):
        f, g = TestFunction(cf, hf), TestFunction(cg, hg)
        neg = TestFunction((-cg[0], -cg[1]), hg)
        th = ThetaMatrix.from_params(lam, 0.0, 2)
        for tmax in args.theta_max:
            for n in args.nodes:
                grid = rapidity_grid(1.0, tmax, n, 2)
                r = commutator_residual(f, g, th, Identity(), z, (0.0, 0.0), grid)
                c = commutator_residual(f, neg, th, Identity(), z, (0.0, 0.0), grid, override=True)
                out.writerow([k, tmax, n, f"{r.relative:.3e}", f"{c.relative:.3e}", f"{r.contour_gap:.1e}"])


if __name__ == "__main__":
    main()
