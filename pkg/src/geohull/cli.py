"""Command-line front end: ``geohull simulate|scaling|floating|capcover|meanwidth|polar``.

Exit codes: 0 success, 1 bad input, 2 runtime failure, 3 scaling slope mismatch.
"""

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import ChartPolytope, GeodesicBall, spherical_polar
from .capcover import CapCoverError, cap_cover_2d
from .config import (
    ConfigError,
    config_hash,
    load_config_text,
    parse_body,
    read_summaries,
    write_json,
    write_points,
    write_summaries,
)
from .measure import body_volume, floating_body_2d, mean_width_U1, wet_part_volume
from .montecarlo import ReplicationError, fit_scaling, resolve_workers, run_experiment


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fail(code, msg):
    print(f"geohull: {msg}", file=sys.stderr)
    return code


def cmd_simulate(args):
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(1, f"cannot read config: {exc}")
    try:
        raw, config = load_config_text(text)
        if args.seed is not None:
            raw = dict(raw, master_seed=args.seed)
            raw, config = load_config_text(json.dumps(raw))
    except ConfigError as exc:
        return _fail(1, f"invalid config field {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    workers = resolve_workers(args.threads)
    try:
        summaries = run_experiment(config, workers=workers)
    except ReplicationError as exc:
        return _fail(2, f"simulation failed; stream id {exc.stream_id}: {exc.cause}")
    except Exception as exc:  # noqa: BLE001
        return _fail(2, f"simulation failed: {exc!r}")
    summary_path = out / "summaries.csv"
    write_summaries(summary_path, config.model, summaries)
    write_json(out / "manifest.json", {
        "config": raw,
        "config_hash": config_hash(raw),
        "started": started,
        "finished": _now(),
        "version": __version__,
        "outputs": {"summaries": str(summary_path)},
    })
    print(f"wrote {len(summaries)} summaries to {summary_path}")
    return 0


def cmd_scaling(args):
    try:
        rows = [s for _, s in read_summaries(args.summaries) if s.statistic == args.stat]
    except (OSError, ValueError, KeyError) as exc:
        return _fail(1, f"cannot read summaries: {exc}")
    if len(rows) < 3:
        return _fail(1, f"need at least 3 rows for statistic {args.stat!r}, found {len(rows)}")
    key = "mean" if args.target == "mean" else "var"
    try:
        fit = fit_scaling([(s.n, getattr(s, key)) for s in rows])
    except ValueError as exc:
        return _fail(1, str(exc))
    result = {
        "statistic": args.stat,
        "target": args.target,
        "slope": fit.slope,
        "ci95": fit.ci95,
        "intercept": fit.intercept,
        "residual_rms": fit.residual_rms,
        "points": [[s.n, getattr(s, key)] for s in rows],
    }
    out = Path(args.out) if args.out else Path(args.summaries).with_name("scaling.json")
    write_json(out, result)
    print(f"slope {fit.slope:.6g} ± {fit.ci95:.3g} (95%), {fit.points} points")
    if args.expected is not None:
        gap = abs(fit.slope - args.expected)
        if gap > fit.ci95 + args.slack:
            return _fail(3, f"slope {fit.slope:.4g} differs from {args.expected} by {gap:.3g}")
    return 0


def _body_from_args(args):
    if args.body:
        text = args.body
        if not text.lstrip().startswith("{"):
            try:
                text = Path(text).read_text(encoding="utf-8")
            except OSError as exc:
                raise ValueError(f"cannot read body file: {exc}") from None
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("body", f"invalid JSON: {exc}") from None
        return parse_body(obj, where="body.")
    obj = {"geometry": args.geometry, "dim": args.dim}
    if args.square is not None:
        obj.update(shape="square", half_side=args.square)
    else:
        obj.update(shape="ball", radius=args.radius)
    return parse_body(obj, where="body.")


def _resolve_t(args, body):
    if args.t is not None:
        return args.t
    return args.t_fraction * body_volume(body)


def cmd_floating(args):
    body = _body_from_args(args)
    t = _resolve_t(args, body)
    fb = floating_body_2d(body, t, args.directions)
    wet = wet_part_volume(body, t, args.directions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_points(out / "floating.csv", fb.chart_vertices.reshape(-1, 2))
    write_json(out / "floating.json", {
        "t": t, "volume": body_volume(body), "wet_part_volume": wet,
        "empty": bool(fb.is_empty), "vertices": int(len(fb.chart_vertices)),
    })
    if fb.is_empty:
        print(f"floating body is empty at t = {t:.6g}; wet part = whole body ({wet:.6g})")
    else:
        print(f"floating body: {len(fb.chart_vertices)} vertices; wet part volume {wet:.10g}")
    return 0


def cmd_capcover(args):
    body = _body_from_args(args)
    t = _resolve_t(args, body)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cover = cap_cover_2d(body, t, strict=not args.no_strict, seed=args.seed)
    except CapCoverError as exc:
        write_json(out / "capcover_report.json", {"t": t, "passed": False, "violated": exc.clause,
                                                  "message": str(exc)})
        return _fail(2, f"cap cover verification failed: {exc}")
    except ValueError as exc:
        return _fail(1, str(exc))
    write_points(out / "caps.csv", [[*c.normal, c.offset] for c in cover.caps],
                 header=("normal_x", "normal_y", "offset"))
    rows = [[i, *v] for i, cell in enumerate(cover.inner_sets) for v in cell]
    write_points(out / "inner_sets.csv", rows, header=("set", "x", "y"))
    write_json(out / "capcover_report.json", {
        "t": t, "passed": True, "m": cover.m, "m_inner": cover.m_inner,
        "above_threshold": cover.report["above_threshold"],
        "threshold": cover.report["threshold"],
        "clauses": cover.report["clauses"],
    })
    print(f"cap cover: m = {cover.m}, m' = {cover.m_inner}; clauses i-iv verified")
    return 0


def cmd_meanwidth(args):
    body = _body_from_args(args)
    est, se = mean_width_U1(body, args.samples, args.seed)
    print(f"U1 = {est:.6f} ± {se:.6f}")
    return 0


def cmd_polar(args):
    body = _body_from_args(args)
    polar = spherical_polar(body)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    s = polar.shape
    if isinstance(s, GeodesicBall):
        info = {"shape": "ball", "center": s.center.tolist(), "radius": s.radius}
        print(f"polar ball: radius {s.radius:.12g} centred at {np.round(s.center, 12).tolist()}")
    else:
        assert isinstance(s, ChartPolytope)
        write_points(out / "polar.csv", s.vertices)
        info = {"shape": "polytope", "vertices": len(s.vertices),
                "frame": np.asarray(polar.frame).tolist()}
        print(f"polar polytope: {len(s.vertices)} vertices")
    write_json(out / "polar.json", info)
    return 0


def _add_body_args(p):
    p.add_argument("--body", help="body JSON (inline or path)")
    p.add_argument("--geometry", default="spherical",
                   choices=["spherical", "hyperbolic", "euclidean"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--radius", type=float, default=0.8, help="geodesic ball radius")
    p.add_argument("--square", type=float, default=None, metavar="HALF_SIDE",
                   help="chart square instead of a ball")


def build_parser():
    ap = argparse.ArgumentParser(prog="geohull", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: GEOHULL_THREADS or 1)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scaling", help="log-log fit of a summary column")
    p.add_argument("summaries")
    p.add_argument("--stat", required=True)
    p.add_argument("--target", choices=["mean", "variance"], default="mean")
    p.add_argument("--expected", type=float, default=None)
    p.add_argument("--slack", type=float, default=0.0)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_scaling)

    for name, func, helptext in (
        ("floating", cmd_floating, "floating body and wet-part volume (d = 2)"),
        ("capcover", cmd_capcover, "verified cap covering of the wet part (d = 2)"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_body_args(p)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--t", type=float)
        g.add_argument("--t-fraction", type=float, help="t as a fraction of Vol(K)")
        p.add_argument("-o", "--out", default=".")
        if name == "floating":
            p.add_argument("--directions", type=int, default=2048)
        else:
            p.add_argument("--no-strict", action="store_true",
                           help="allow t above the covering threshold")
            p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)

    p = sub.add_parser("meanwidth", help="Monte Carlo mean width U1 (spherical)")
    _add_body_args(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_meanwidth)

    p = sub.add_parser("polar", help="spherical polar body")
    _add_body_args(p)
    p.add_argument("-o", "--out", default=".")
    p.set_defaults(func=cmd_polar)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except ConfigError as exc:
        return _fail(1, f"invalid body field {exc}")
    except (ValueError, NotImplementedError) as exc:
        return _fail(1, str(exc))
    except Exception as exc:  # noqa: BLE001
        return _fail(2, f"{type(exc).__name__}: {exc}")
    if args.command in ("simulate",):
        print(f"done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
