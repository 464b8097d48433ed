"""Wet-part volume against t for spherical and hyperbolic balls, with the log-log slope."""

import argparse

from geohull.bodies import geodesic_ball
from geohull.geometry import hyperbolic, spherical
from geohull.measure import body_volume, wet_part_volume
from geohull.montecarlo import fit_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=0.8)
    ap.add_argument("--kmin", type=int, default=6)
    ap.add_argument("--kmax", type=int, default=14)
    ap.add_argument("--directions", type=int, default=2048)
    args = ap.parse_args()

    for name, g in (("spherical", spherical(2)), ("hyperbolic", hyperbolic(2))):
        body = geodesic_ball(g, args.radius)
        V = body_volume(body)
        pts = []
        for k in range(args.kmin, args.kmax + 1):
            t = 2.0**-k * V
            w = wet_part_volume(body, t, args.directions)
            pts.append((t, w))
            print(f"{name:>10} t = 2^-{k:<2d} V  wet = {w:.6e}")
        fit = fit_scaling(pts)
        print(f"{name:>10} slope {fit.slope:+.4f} ± {fit.ci95:.4f} (theory +0.6667)")


if __name__ == "__main__":
    main()
