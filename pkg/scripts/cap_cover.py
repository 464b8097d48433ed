"""Cap-cover sizes m(t) and clause verification for the ball and square bodies."""

import argparse
import time

from geohull.bodies import chart_square, geodesic_ball
from geohull.capcover import cap_cover_2d, threshold
from geohull.geometry import spherical
from geohull.measure import body_volume
from geohull.montecarlo import fit_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmin", type=int, default=6)
    ap.add_argument("--kmax", type=int, default=12)
    ap.add_argument("--verify", action="store_true", help="verify clauses wherever t is below threshold")
    args = ap.parse_args()

    g = spherical(2)
    for name, body in (("ball", geodesic_ball(g, 0.8)), ("square", chart_square(g, 0.5))):
        V = body_volume(body)
        pts = []
        for k in range(args.kmin, args.kmax + 1):
            t = 2.0**-k * V
            below = t < threshold(body)
            t0 = time.perf_counter()
            cover = cap_cover_2d(body, t, strict=False, verify=args.verify and below, seed=k)
            pts.append((t, cover.m))
            status = "verified" if "clauses" in cover.report else "unverified"
            print(f"{name:>6} t = 2^-{k:<2d} V  m = {cover.m:4d}  m' = {cover.m_inner:4d}  "
                  f"{status:>10}  {time.perf_counter() - t0:5.1f}s")
        fit = fit_scaling(pts)
        print(f"{name:>6} slope of m(t): {fit.slope:+.4f} ± {fit.ci95:.4f}")


if __name__ == "__main__":
    main()
