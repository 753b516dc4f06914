"""Sharp lower bound versus beta, compared with lambda of a few explicit maps."""

import argparse

import numpy as np

from lambda_lab import build_map, constants, lambda_via_map, mobius_series, poly_series
from lambda_lab.series import LaurentSeries


def maps(beta):
    yield "identity", poly_series([0, 1], 0, beta, 1.0)
    yield "1 - 1/(z+2)", mobius_series(1.0, -1.0, 2.0, beta, 1.0)
    yield "1/(z+1.2)", mobius_series(0.0, 1.0, 1.2, beta, 1.0)
    yield "z + 0.1 z^2", LaurentSeries.from_dict({1: 1.0, 2: 0.1}, beta, 1.0)
    yield "z + (beta^2/4)/z", LaurentSeries.from_dict({1: 1.0, -1: beta**2 / 4}, beta, 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--betas", default="0.01,0.05,0.1,0.2,0.3,0.5,0.7,0.9")
    args = ap.parse_args()
    betas = [float(b) for b in args.betas.split(",")]
    print(f"{'beta':>6}  {'c3':>12}  {'bound':>14}  {'map':<18}  {'lambda':>14}  {'defect':>12}  eq")
    for beta in betas:
        c = constants(beta)
        for i, (name, f) in enumerate(maps(beta)):
            rep = lambda_via_map(build_map(f, beta, require_outer=True))
            head = f"{beta:6.3f}  {c.c3:12.6f}  {c.lambda_bound:14.6f}" if i == 0 else " " * 36
            print(f"{head}  {name:<18}  {rep.lam:14.6f}  {rep.defect:12.4e}  {rep.equality}")
    print(f"\nbeta -> 0 limit: {constants(0.0).lambda_bound:.9f}  (2 pi^2 / 3 = {2 * np.pi**2 / 3:.9f})")


if __name__ == "__main__":
    main()
