"""Strict JSON experiment configs and result-file readers/writers."""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .bodies import ChartEllipse, ChartPolytope, ConvexBodySpec, GeodesicBall
from .geometry import Geometry, Kind
from .montecarlo import EstimatorSummary, Model, SimulationConfig, Statistic

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = (
    "model", "statistic", "n", "mean", "var", "stderr_mean", "stderr_var", "replications", "seed",
)

_CONFIG_FIELDS = {
    "schema_version", "body", "model", "n_grid", "replications", "master_seed",
    "statistics", "u1_samples",
}
_SHAPE_FIELDS = {
    "ball": {"geometry", "dim", "shape", "radius", "center"},
    "ellipse": {"geometry", "dim", "shape", "center", "semi_axes", "angle", "frame"},
    "polytope": {"geometry", "dim", "shape", "vertices", "frame"},
    "square": {"geometry", "dim", "shape", "half_side", "frame"},
}


class ConfigError(ValueError):
    """Invalid config; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


def _require(obj, key, where, kind=None):
    if key not in obj:
        raise ConfigError(f"{where}{key}", "missing required field")
    val = obj[key]
    wrong_type = kind is not None and not isinstance(val, kind)
    if wrong_type or (isinstance(val, bool) and kind is not bool):
        raise ConfigError(f"{where}{key}", f"expected {_kind_name(kind)}, got {type(val).__name__}")
    return val


def _kind_name(kind):
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__ if kind else "value"


def _reject_unknown(obj, allowed, where):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}{extra[0]}", "unknown field")


def _vector(val, field, length=None):
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(field, "expected a numeric array") from None
    if length is not None and arr.shape != (length,):
        raise ConfigError(field, f"expected {length} numbers")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(field, "non-finite entries")
    return arr


def parse_body(obj, where="body."):
    if not isinstance(obj, dict):
        raise ConfigError(where.rstrip("."), "expected an object")
    shape = _require(obj, "shape", where, str)
    if shape not in _SHAPE_FIELDS:
        raise ConfigError(f"{where}shape", f"unknown shape {shape!r}")
    _reject_unknown(obj, _SHAPE_FIELDS[shape], where)
    kind = _require(obj, "geometry", where, str)
    try:
        kind = Kind(kind)
    except ValueError:
        raise ConfigError(f"{where}geometry", f"unknown geometry {kind!r}") from None
    dim = _require(obj, "dim", where, int)
    try:
        g = Geometry(kind, dim)
    except ValueError as exc:
        raise ConfigError(f"{where}dim", str(exc)) from None
    frame = None
    if "frame" in obj:
        frame = np.asarray(obj["frame"], dtype=float)
        if frame.shape != (dim + 1, dim + 1):
            raise ConfigError(f"{where}frame", f"expected a {dim + 1}x{dim + 1} matrix")
    try:
        if shape == "ball":
            radius = _require(obj, "radius", where, (int, float))
            center = _vector(obj["center"], f"{where}center", dim + 1) if "center" in obj else g.pole
            return ConvexBodySpec(g, GeodesicBall(center, float(radius)))
        if shape == "ellipse":
            center = _vector(_require(obj, "center", where), f"{where}center", 2)
            axes = _vector(_require(obj, "semi_axes", where), f"{where}semi_axes", 2)
            angle = float(obj.get("angle", 0.0))
            return ConvexBodySpec(g, ChartEllipse(center, axes, angle), frame)
        if shape == "square":
            h = float(_require(obj, "half_side", where, (int, float)))
            verts = np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
            return ConvexBodySpec(g, ChartPolytope(verts), frame)
        verts = np.asarray(_require(obj, "vertices", where, list), dtype=float)
        return ConvexBodySpec(g, ChartPolytope(verts), frame)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}shape", str(exc)) from None


def parse_config(obj):
    """SimulationConfig from a decoded JSON document."""
    if not isinstance(obj, dict):
        raise ConfigError("<root>", "expected a JSON object")
    _reject_unknown(obj, _CONFIG_FIELDS, "")
    version = _require(obj, "schema_version", "", int)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}")
    body = parse_body(_require(obj, "body", "", dict))
    model = _require(obj, "model", "", str)
    try:
        model = Model(model)
    except ValueError:
        raise ConfigError("model", f"unknown model {model!r}") from None
    n_grid = _require(obj, "n_grid", "", list)
    if not n_grid or not all(isinstance(n, int) and not isinstance(n, bool) for n in n_grid):
        raise ConfigError("n_grid", "expected a non-empty list of integers")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("n_grid", "must be strictly increasing")
    if n_grid[0] < body.dim + 1:
        raise ConfigError("n_grid", f"entries must be >= d + 1 = {body.dim + 1}")
    reps = _require(obj, "replications", "", int)
    if reps < 2:
        raise ConfigError("replications", "must be >= 2")
    seed = _require(obj, "master_seed", "", int)
    if not 0 <= seed < 2**64:
        raise ConfigError("master_seed", "must be a 64-bit unsigned integer")
    default_stats = ["missed_volume", "f0"] if model is Model.INSCRIBED else ["fd1", "mean_width_excess"]
    stat_names = obj.get("statistics", default_stats)
    if not isinstance(stat_names, list) or not stat_names:
        raise ConfigError("statistics", "expected a non-empty list")
    try:
        statistics = tuple(Statistic(s) for s in stat_names)
    except ValueError as exc:
        raise ConfigError("statistics", str(exc)) from None
    if len(set(statistics)) != len(statistics):
        raise ConfigError("statistics", "duplicate entries")
    u1 = obj.get("u1_samples", 1_000_000)
    if not isinstance(u1, int) or isinstance(u1, bool) or u1 < 1:
        raise ConfigError("u1_samples", "must be a positive integer")
    try:
        return SimulationConfig(body, model, n_grid, reps, seed, statistics, u1)
    except ValueError as exc:
        raise ConfigError("model" if "model" in str(exc) else "statistics", str(exc)) from None


def load_config_text(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"invalid JSON: {exc}") from None
    return obj, parse_config(obj)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def git_blob_sha1(data):
    """Object id git assigns to a blob with this content."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def config_hash(obj):
    return git_blob_sha1(canonical_json(obj))


# ---------------------------------------------------------------- result files


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_summaries(path, model, summaries):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([
                Model(model).value, s.statistic, _fmt(s.n), _fmt(s.mean), _fmt(s.var),
                _fmt(s.stderr_mean), _fmt(s.stderr_var), _fmt(s.replications), _fmt(s.seed),
            ])


def read_summaries(path):
    """Rows of summaries.csv as (model, EstimatorSummary) pairs."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        if tuple(r.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"unexpected columns {r.fieldnames}")
        for row in r:
            out.append((row["model"], EstimatorSummary(
                n=int(row["n"]),
                statistic=row["statistic"],
                mean=float(row["mean"]),
                var=float(row["var"]),
                stderr_mean=float(row["stderr_mean"]),
                stderr_var=float(row["stderr_var"]),
                replications=int(row["replications"]),
                seed=int(row["seed"]),
            )))
    return out


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_points(path, points, header=("x", "y")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p in np.atleast_2d(points):
            w.writerow([_fmt(v) for v in p])


def read_points(path):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return tuple(header), np.array(rows).reshape(-1, len(header))
