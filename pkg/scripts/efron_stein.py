"""Efron-Stein ratio Var Vol(K_n) / ((n+1) E[increment^2]) and floating-body containment rates."""

import argparse

from geohull.bodies import geodesic_ball
from geohull.geometry import hyperbolic, spherical
from geohull.montecarlo import efron_stein_diagnostic, floating_containment_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--geometry", choices=["spherical", "hyperbolic"], default="spherical")
    ap.add_argument("--radius", type=float, default=0.8)
    ap.add_argument("--n", type=int, nargs="+", default=[256, 1024])
    ap.add_argument("--replications", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    g = spherical(2) if args.geometry == "spherical" else hyperbolic(2)
    body = geodesic_ball(g, args.radius)
    for n in args.n:
        res = efron_stein_diagnostic(body, n, args.replications, args.seed, args.workers)
        print(f"n = {n:5d}  ratio {res.ratio:.4f} ± {res.ratio_stderr:.4f}  "
              f"max increment gap {res.max_increment_gap:.2e}")
        for c in (1.0, 5.0, 20.0):
            rate, se = floating_containment_rate(body, n, c, replications=100, master_seed=args.seed)
            print(f"          containment rate c = {c:4.1f}: {rate:.3f} ± {se:.3f}")


if __name__ == "__main__":
    main()
