"""Circumscribed model: facet count and mean-width excess exponents for a spherical ball."""

import argparse

from geohull.bodies import geodesic_ball
from geohull.geometry import spherical
from geohull.montecarlo import SimulationConfig, run_experiment, summaries_fit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=0.8)
    ap.add_argument("--kmin", type=int, default=4)
    ap.add_argument("--kmax", type=int, default=10)
    ap.add_argument("--replications", type=int, default=2000)
    ap.add_argument("--u1-replications", type=int, default=64)
    ap.add_argument("--u1-samples", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    body = geodesic_ball(spherical(2), args.radius)
    n_grid = [2**k for k in range(args.kmin, args.kmax + 1)]
    facets = run_experiment(
        SimulationConfig(body, "circumscribed", n_grid, args.replications, args.seed, statistics=["fd1"]),
        workers=args.workers,
    )
    widths = run_experiment(
        SimulationConfig(body, "circumscribed", n_grid, args.u1_replications, args.seed + 1,
                         statistics=["mean_width_excess"], u1_samples=args.u1_samples),
        workers=args.workers,
    )
    for s in facets + widths:
        print(f"{s.statistic:>18} {s.n:>6} mean {s.mean:12.6g} var {s.var:12.6g}")
    for rows, stat, target, theory in (
        (facets, "fd1", "mean", 1 / 3),
        (facets, "fd1", "variance", 1 / 3),
        (widths, "mean_width_excess", "mean", -2 / 3),
    ):
        fit = summaries_fit(rows, stat, target)
        print(f"{stat} {target}: slope {fit.slope:+.4f} ± {fit.ci95:.4f} (theory {theory:+.4f})")


if __name__ == "__main__":
    main()
