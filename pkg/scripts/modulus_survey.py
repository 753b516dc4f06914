"""Conformal modulus of eccentric annuli against the closed form obtained by a
Moebius map that makes both circles concentric."""

import argparse
import math

from lambda_lab import BoundaryCurve, CurveBounded, modulus


def exact_beta(c, rho):
    q = (1 + c * c - rho * rho) / c
    a = (q - math.sqrt(q * q - 4)) / 2
    w = abs((c + rho - a) / (1 - a * (c + rho)))
    return w if w < 1 else abs((c - rho - a) / (1 - a * (c - rho)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho", type=float, default=0.3)
    ap.add_argument("--offsets", default="0.05,0.1,0.2,0.3,0.4,0.5")
    args = ap.parse_args()
    print(f"{'c':>6} {'rho':>6} {'beta exact':>12} {'beta grid':>12} {'error':>10}")
    for c in (float(s) for s in args.offsets.split(",")):
        if c + args.rho >= 0.95:
            continue
        spec = CurveBounded(BoundaryCurve.circle(0, 1), BoundaryCurve.circle(c, args.rho))
        ref = exact_beta(c, args.rho)
        got = modulus(spec).beta
        print(f"{c:6.3f} {args.rho:6.3f} {ref:12.8f} {got:12.8f} {got - ref:10.2e}")


if __name__ == "__main__":
    main()
