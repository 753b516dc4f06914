"""Punctured unit disk: the computed solution against the lower (punctured-disk)
and upper (shell) barriers along a ray, and the gap between initializations."""

import argparse

import numpy as np

from lambda_lab import BoundaryCurve, Punctured, solve_liouville, u_punctured_disk, u_shell
from lambda_lab.liouville import u_at


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=1 / 128)
    ap.add_argument("--shell", type=float, default=1e-3, help="inner radius of the upper barrier")
    args = ap.parse_args()
    spec = Punctured(BoundaryCurve.circle(0, 1), (0j,))
    a = solve_liouville(spec, args.h, init="distance")
    b = solve_liouville(spec, args.h, init="barrier")
    r = np.array([0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    z = r * np.exp(0.3j)
    u = u_at(a, z)
    lo, hi = u_punctured_disk(1.0, 0j, z), u_shell(args.shell, 0j, z)
    print(f"{'r':>5} {'lower':>10} {'u':>10} {'upper':>10}")
    for row in zip(r, lo, u, hi):
        print("{:5.2f} {:10.5f} {:10.5f} {:10.5f}".format(*row))
    m = np.isfinite(a.u.values) & np.isfinite(b.u.values)
    print(f"max |u_distance - u_barrier| = {np.max(np.abs(a.u.values[m] - b.u.values[m])):.2e}")
    print(f"monotonicity excess = {max(s.monotone_excess for s in a.states[1:]):.2e}")


if __name__ == "__main__":
    main()
