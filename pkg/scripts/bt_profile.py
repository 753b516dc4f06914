"""A(t) and B(t) profiles for a Moebius map and for Laurent perturbations of the
identity; B vanishes identically only in the Moebius case."""

import argparse
import csv
import math

import numpy as np

from lambda_lab import build_map, mobius_series, profile
from lambda_lab.series import LaurentSeries


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--csv", help="write t and every profile to this path")
    args = ap.parse_args()
    beta = args.beta
    cases = {
        "moebius": mobius_series(0.0, -1.0, 2.0, beta, 1.0),
        "z+0.2z^2": LaurentSeries.from_dict({1: 1.0, 2: 0.2}, beta, 1.0),
        "z+0.1z^3": LaurentSeries.from_dict({1: 1.0, 3: 0.1}, beta, 1.0),
        "z+eps/z": LaurentSeries.from_dict({1: 1.0, -1: 0.5 * beta**2}, beta, 1.0),
    }
    ts = math.log(beta) * (1 - (np.arange(args.n) + 0.5) / args.n)
    cols = {"t": ts}
    print(f"{'map':<10} {'min A':>10} {'min B':>12} {'max B':>12}")
    for name, f in cases.items():
        p = profile(build_map(f, beta), ts)
        cols[f"A[{name}]"], cols[f"B[{name}]"] = p.A, p.B
        print(f"{name:<10} {p.A.min():10.5f} {p.B.min():12.4e} {p.B.max():12.4e}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            w.writerows(zip(*cols.values()))


if __name__ == "__main__":
    main()
