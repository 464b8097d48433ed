"""Inscribed model: mean and variance exponents of missed volume and f0 for a geodesic ball."""

import argparse

from geohull.bodies import geodesic_ball
from geohull.geometry import Geometry, Kind
from geohull.montecarlo import SimulationConfig, run_experiment, summaries_fit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--geometry", choices=["spherical", "hyperbolic", "euclidean"], default="spherical")
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--radius", type=float, default=0.8)
    ap.add_argument("--kmin", type=int, default=7)
    ap.add_argument("--kmax", type=int, default=13)
    ap.add_argument("--replications", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    body = geodesic_ball(Geometry(Kind(args.geometry), args.dim), args.radius)
    n_grid = [2**k for k in range(args.kmin, args.kmax + 1)]
    cfg = SimulationConfig(body, "inscribed", n_grid, args.replications, args.seed)
    summaries = run_experiment(cfg, workers=args.workers)
    print(f"{'statistic':>14} {'n':>6} {'mean':>12} {'var':>12}")
    for s in summaries:
        print(f"{s.statistic:>14} {s.n:>6} {s.mean:12.6g} {s.var:12.6g}")
    d = args.dim
    targets = {
        ("missed_volume", "mean"): -2 / (d + 1),
        ("missed_volume", "variance"): -(d + 3) / (d + 1),
        ("f0", "mean"): (d - 1) / (d + 1),
        ("f0", "variance"): (d - 1) / (d + 1),
    }
    for (stat, target), expected in targets.items():
        fit = summaries_fit(summaries, stat, target)
        print(f"{stat:>14} {target:>8}: slope {fit.slope:+.4f} ± {fit.ci95:.4f}  (theory {expected:+.4f})")


if __name__ == "__main__":
    main()
