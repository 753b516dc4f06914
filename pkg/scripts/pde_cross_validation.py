"""Solve the blow-up problem on the annulus, the disk and a Moebius image, and
compare the numerical lambda with the series pipeline."""

import argparse
import time

from lambda_lab import (
    Annulus,
    MappedAnnulus,
    UnitDisk,
    build_map,
    constants,
    extract_c3_fit,
    extract_c3_flux,
    lambda_numeric,
    lambda_via_map,
    mobius_series,
    poly_series,
    solve_liouville,
)
from lambda_lab.domain import geometry
from lambda_lab.expansion import outer_frames


def fixtures(beta):
    mob = mobius_series(0.0, -1.0, 2.0, beta, 1.0)
    yield "annulus", Annulus(beta), lambda_via_map(build_map(poly_series([0, 1], 0, beta, 1.0), beta)).lam
    yield "disk", UnitDisk(), 0.0
    yield "moebius", MappedAnnulus(mob, beta), lambda_via_map(build_map(mob, beta)).lam


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--h", type=float, nargs="+", default=[1 / 64, 1 / 128, 1 / 256],
                    help="grid spacings relative to the domain scale")
    ap.add_argument("--frames", type=int, default=64)
    args = ap.parse_args()
    print(f"bound at beta={args.beta}: {constants(args.beta).lambda_bound:.6f}")
    print(f"{'domain':<8} {'h/scale':>8} {'lambda fit':>12} {'lambda flux':>12} {'exact':>12} {'error':>9} {'sec':>6}")
    for name, spec, exact in fixtures(args.beta):
        sc = geometry(spec).scale
        for hr in args.h:
            t = time.perf_counter()
            sol = solve_liouville(spec, hr * sc, [e * sc for e in (0.04, 0.02, 0.01)])
            fr = outer_frames(sol, args.frames)
            v = sol.v()
            try:
                fit = lambda_numeric(extract_c3_fit(v, fr)).lam
                flux = lambda_numeric(extract_c3_flux(v, fr)).lam
            except ValueError as exc:
                print(f"{name:<8} {hr:8.5f}  skipped: {exc}")
                continue
            # absolute error where the exact value is zero
            err = abs(fit - exact) / abs(exact) if exact else abs(fit)
            print(f"{name:<8} {hr:8.5f} {fit:12.5f} {flux:12.5f} {exact:12.5f} {err:9.2e} {time.perf_counter() - t:6.1f}")


if __name__ == "__main__":
    main()
