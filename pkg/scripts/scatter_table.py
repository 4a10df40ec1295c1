"""Sharp-packet S-matrix phase against lambda and grid size.

Prints CSV: lambda, n_nodes, phase_re, phase_im, expected_re, expected_im, deviation.
"""
import argparse
import csv
import sys

from warpfock.suites import scatter_deviation
from warpfock.testfunctions import rapidity_grid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 0.1, 0.5, 1.0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--rapidities", type=float, nargs=2, default=[0.3, -0.3])
    ap.add_argument("--theta-max", type=float, default=4.0)
    args = ap.parse_args(argv)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["lambda", "n_nodes", "phase_re", "phase_im", "expected_re", "expected_im", "deviation"])
    for lam in args.lambdas:
        for n in args.nodes:
            s, ex, dev = scatter_deviation(rapidity_grid(1.0, args.theta_max, n, 2), lam, *args.rapidities)
            out.writerow([lam, n, f"{s.real:.12f}", f"{s.imag:.12f}", f"{ex.real:.12f}", f"{ex.imag:.12f}", f"{dev:.3e}"])


if __name__ == "__main__":
    main()
