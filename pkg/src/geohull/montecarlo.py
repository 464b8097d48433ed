"""Random polytope experiments: samplers, replication runner, estimators and fits.

Replication ``r`` at sample size ``n`` draws from its own Philox stream keyed
by a hash of (master_seed, n, r). Results never depend on the worker count
because every task is self-seeded and summaries are reduced in replication
order.
"""

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

from .bodies import ConvexBodySpec, GeodesicBall, bounding_cap, contains, polar_polytope, spherical_polar
from .geometry import Kind, isometry_inverse, isometry_to_pole
from .hull import DegenerateHullError, convex_hull, f_vector, facet_cone_simplices, visible_facets
from .measure import body_volume, floating_body_2d, mean_width_excess, polytope_volume
from .quadrature import integrate_simplices

ENVELOPE_WINDOW = 1_000_000
ENVELOPE_MIN_RATE = 1e-4
POLE_RETRIES = 100
CONTAINMENT_CHECKS = 100
INCREMENT_TOL = 1e-7
DEFAULT_U1_SAMPLES = 1_000_000


class Model(str, Enum):
    INSCRIBED = "inscribed"
    CIRCUMSCRIBED = "circumscribed"


class Statistic(str, Enum):
    MISSED_VOLUME = "missed_volume"
    F0 = "f0"
    FD1 = "fd1"
    MEAN_WIDTH_EXCESS = "mean_width_excess"


class EnvelopeError(RuntimeError):
    pass


class ReplicationError(RuntimeError):
    def __init__(self, stream_id, cause):
        self.stream_id = stream_id
        self.cause = cause if isinstance(cause, str) else repr(cause)
        super().__init__(f"replication with stream {stream_id} failed: {self.cause}")

    def __reduce__(self):
        return (ReplicationError, (self.stream_id, self.cause))


@dataclass(frozen=True)
class SimulationConfig:
    body: ConvexBodySpec
    model: Model
    n_grid: tuple
    replications: int
    master_seed: int
    statistics: tuple = (Statistic.MISSED_VOLUME, Statistic.F0)
    u1_samples: int = DEFAULT_U1_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "statistics", tuple(Statistic(s) for s in self.statistics))
        d = self.body.dim
        if len(self.n_grid) == 0 or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be non-empty and strictly increasing")
        if self.n_grid[0] < d + 1:
            raise ValueError(f"n_grid entries must be >= d + 1 = {d + 1}")
        if int(self.replications) != self.replications or self.replications < 2:
            raise ValueError("replications must be an integer >= 2")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.model is Model.CIRCUMSCRIBED and self.body.geometry.kind is not Kind.SPHERICAL:
            raise ValueError("the circumscribed model needs a spherical body")
        if self.model is Model.INSCRIBED and Statistic.MEAN_WIDTH_EXCESS in self.statistics:
            raise ValueError("mean_width_excess is a circumscribed statistic")
        if self.u1_samples < 1:
            raise ValueError("u1_samples must be positive")


@dataclass(frozen=True)
class EstimatorSummary:
    n: int
    statistic: str
    mean: float
    var: float
    stderr_mean: float
    stderr_var: float
    replications: int
    seed: int


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    ci95: float
    residual_rms: float
    points: int


@dataclass(frozen=True)
class EfronSteinResult:
    varhat: float
    bound: float
    ratio: float
    ratio_stderr: float
    max_increment_gap: float
    increments: np.ndarray = field(repr=False)


# ---------------------------------------------------------------- streams


def stream_key(master_seed, n, r):
    h = hashlib.blake2b(digest_size=16)
    h.update(f"{int(master_seed)}:{int(n)}:{int(r)}".encode())
    return h.digest()


def replication_stream(master_seed, n, r):
    """(Generator, stream id) for replication r at sample size n."""
    key = stream_key(master_seed, n, r)
    gen = np.random.Generator(np.random.Philox(key=int.from_bytes(key, "little")))
    return gen, key.hex()


def resolve_workers(workers=None):
    if workers is None:
        env = os.environ.get("GEOHULL_THREADS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def run_tasks(fn, args, workers=1):
    """Map fn over args, preserving order; processes when workers > 1."""
    workers = resolve_workers(workers)
    if workers == 1 or len(args) <= 1:
        return [fn(a) for a in args]
    chunk = max(1, len(args) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args, chunksize=chunk))


# ---------------------------------------------------------------- sampling


def _radial_cdf_inverse(kind, dim, R, u):
    """Geodesic radius with density proportional to the sphere area at that radius."""
    if dim == 2:
        if kind is Kind.SPHERICAL:
            return 2.0 * np.arcsin(np.sqrt(u) * np.sin(R / 2.0))
        if kind is Kind.HYPERBOLIC:
            return 2.0 * np.arcsinh(np.sqrt(u) * np.sinh(R / 2.0))
        return R * np.sqrt(u)
    if kind is Kind.EUCLIDEAN:
        return R * u ** (1.0 / dim)
    if dim != 3:
        raise NotImplementedError("radial sampling is implemented for d in {2, 3}")
    if kind is Kind.SPHERICAL:
        F = lambda x: x - np.sin(x) * np.cos(x)
        dF = lambda x: 2.0 * np.sin(x) ** 2
    else:
        F = lambda x: np.sinh(x) * np.cosh(x) - x
        dF = lambda x: 2.0 * np.sinh(x) ** 2
    goal = u * F(R)
    x = R * np.cbrt(u)
    for _ in range(60):
        step = (F(x) - goal) / np.maximum(dF(x), 1e-300)
        x = np.clip(x - step, 0.0, R)
        if np.all(np.abs(step) <= 1e-15 * R):
            break
    return x


def sample_cap(geometry, center, radius, k, rng):
    """k uniform points in the geodesic ball B(center, radius)."""
    d = geometry.dim
    u = rng.random(k)
    z = rng.standard_normal((k, d))
    z /= np.linalg.norm(z, axis=1)[:, None]
    theta = _radial_cdf_inverse(geometry.kind, d, radius, u)
    if geometry.kind is Kind.SPHERICAL:
        y = np.column_stack([np.sin(theta)[:, None] * z, np.cos(theta)])
    elif geometry.kind is Kind.HYPERBOLIC:
        y = np.column_stack([np.sinh(theta)[:, None] * z, np.cosh(theta)])
    else:
        y = np.column_stack([theta[:, None] * z, np.ones(k)])
    F = isometry_to_pole(geometry, center)
    return y @ isometry_inverse(geometry, F).T


def sample_uniform(body, n, rng):
    """n i.i.d. volume-uniform points of the body, as ambient coordinates."""
    g = body.geometry
    if n == 0:
        return np.zeros((0, g.dim + 1))
    if "bounding_cap" not in body._cache:
        body._cache["bounding_cap"] = bounding_cap(body)
    center, radius = body._cache["bounding_cap"]
    if isinstance(body.shape, GeodesicBall):
        return sample_cap(g, center, radius, n, rng)
    out = []
    have = 0
    proposed = 0
    accepted = 0
    batch = max(64, 2 * n)
    while have < n:
        x = sample_cap(g, center, radius, batch, rng)
        keep = x[contains(body, x)]
        proposed += batch
        accepted += len(keep)
        out.append(keep)
        have += len(keep)
        if proposed >= ENVELOPE_WINDOW and accepted < ENVELOPE_MIN_RATE * proposed:
            raise EnvelopeError(
                f"acceptance rate {accepted / proposed:.2e} below {ENVELOPE_MIN_RATE:g}"
            )
        rate = max(accepted / proposed, 1e-3)
        batch = int(min(max(64, 1.2 * (n - have) / rate), ENVELOPE_WINDOW))
    return np.concatenate(out)[:n]


def sample_circumscribed(body, n, rng, polar=None):
    """Intersection of n random hemispheres containing the body.

    Returns (polytope, retries). The poles are uniform in the polar body.
    """
    if body.geometry.kind is not Kind.SPHERICAL:
        raise ValueError("the circumscribed model needs a spherical body")
    polar = spherical_polar(body) if polar is None else polar
    for attempt in range(POLE_RETRIES + 1):
        poles = sample_uniform(polar, n, rng)
        try:
            hull = convex_hull(polar.geometry, poles, polar.chart_frame)
            P = polar_polytope(hull)
        except DegenerateHullError:
            continue
        check = sample_uniform(body, CONTAINMENT_CHECKS, rng)
        if not np.all(P.contains(check, tol=1e-9)):
            raise RuntimeError("circumscribed polytope does not contain the body")
        return P, attempt
    raise DegenerateHullError(body.dim - 1, f"pole hull degenerate after {POLE_RETRIES} retries")


# ---------------------------------------------------------------- replications


def _inscribed_replication(task):
    body, n, master_seed, r, statistics = task
    rng, sid = replication_stream(master_seed, n, r)
    try:
        pts = sample_uniform(body, n, rng)
        P = convex_hull(body.geometry, pts, body.chart_frame)
        out = {}
        f0, fd1 = f_vector(P)
        for s in statistics:
            if s is Statistic.MISSED_VOLUME:
                out[s] = body_volume(body) - polytope_volume(P)[0]
            elif s is Statistic.F0:
                out[s] = float(f0)
            elif s is Statistic.FD1:
                out[s] = float(fd1)
        return out
    except Exception as exc:  # noqa: BLE001 - wrap with the stream id
        raise ReplicationError(sid, exc) from exc


def _circumscribed_replication(task):
    body, n, master_seed, r, statistics, u1_samples = task
    rng, sid = replication_stream(master_seed, n, r)
    try:
        P, _ = sample_circumscribed(body, n, rng, polar=spherical_polar(body))
        f0, fd1 = f_vector(P)
        out = {}
        for s in statistics:
            if s is Statistic.MISSED_VOLUME:
                out[s] = polytope_volume(P)[0] - body_volume(body)
            elif s is Statistic.F0:
                out[s] = float(f0)
            elif s is Statistic.FD1:
                out[s] = float(fd1)
            elif s is Statistic.MEAN_WIDTH_EXCESS:
                out[s] = mean_width_excess(P, body, u1_samples, rng)[0]
        return out
    except Exception as exc:  # noqa: BLE001
        raise ReplicationError(sid, exc) from exc


def jackknife_variance_stderr(x):
    """Delete-one jackknife standard error of the unbiased sample variance."""
    x = np.asarray(x, dtype=float)
    R = len(x)
    if R < 3:
        return float("nan")
    y = x - x.mean()
    ss = np.sum(y * y)
    loo = (ss - y * y - y * y / (R - 1)) / (R - 2)
    return float(np.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2)))


def summarize(values, n, statistic, seed):
    x = np.asarray(values, dtype=float)
    R = len(x)
    var = float(np.var(x, ddof=1)) if R > 1 else 0.0
    return EstimatorSummary(
        n=int(n),
        statistic=Statistic(statistic).value,
        mean=float(np.mean(x)),
        var=var,
        stderr_mean=float(np.sqrt(var / R)),
        stderr_var=jackknife_variance_stderr(x),
        replications=R,
        seed=int(seed),
    )


def _run(config, fn, extra, workers):
    tasks = [
        (config.body, n, config.master_seed, r, config.statistics) + extra
        for n in config.n_grid
        for r in range(config.replications)
    ]
    results = run_tasks(fn, tasks, workers)
    out = []
    R = config.replications
    for i, n in enumerate(config.n_grid):
        block = results[i * R:(i + 1) * R]
        for s in config.statistics:
            out.append(summarize([b[s] for b in block], n, s, config.master_seed))
    return out


def run_inscribed_experiment(config, workers=None):
    if config.model is not Model.INSCRIBED:
        raise ValueError("config is not an inscribed experiment")
    return _run(config, _inscribed_replication, (), workers)


def run_circumscribed_experiment(config, workers=None):
    if config.model is not Model.CIRCUMSCRIBED:
        raise ValueError("config is not a circumscribed experiment")
    return _run(config, _circumscribed_replication, (config.u1_samples,), workers)


def run_experiment(config, workers=None):
    if config.model is Model.INSCRIBED:
        return run_inscribed_experiment(config, workers)
    return run_circumscribed_experiment(config, workers)


# ---------------------------------------------------------------- diagnostics


def _efron_stein_replication(task):
    body, n, master_seed, r = task
    rng, sid = replication_stream(master_seed, n, r)
    pts = sample_uniform(body, n + 1, rng)
    P = convex_hull(body.geometry, pts[:n], body.chart_frame)
    Q = convex_hull(body.geometry, pts, body.chart_frame)
    vn = polytope_volume(P)[0]
    by_difference = polytope_volume(Q)[0] - vn
    vis = visible_facets(P, pts[n])
    if len(vis):
        by_facets = integrate_simplices(body.geometry, facet_cone_simplices(P, pts[n], vis))[0]
    else:
        by_facets = 0.0
    return vn, by_difference, by_facets, sid


def efron_stein_diagnostic(body, n, replications, master_seed, workers=None):
    """Var Vol(K_n) against (n+1) E[(Vol K_{n+1} - Vol K_n)^2].

    The increment is computed both as a volume difference and as the sum of
    the cone volumes over the facets visible from the new point.
    """
    tasks = [(body, n, master_seed, r) for r in range(replications)]
    res = run_tasks(_efron_stein_replication, tasks, workers)
    vn = np.array([x[0] for x in res])
    d1 = np.array([x[1] for x in res])
    d2 = np.array([x[2] for x in res])
    gaps = np.abs(d1 - d2)
    if np.any(gaps > INCREMENT_TOL):
        k = int(np.argmax(gaps))
        raise RuntimeError(
            f"increment mismatch {gaps[k]:.3g} in stream {res[k][3]}"
        )
    inc = d1
    varhat = float(np.var(vn, ddof=1))
    bound = float((n + 1) * np.mean(inc * inc))
    ratio = varhat / bound
    # delete-one jackknife of the ratio
    R = replications
    y = vn - vn.mean()
    ss = np.sum(y * y)
    var_loo = (ss - y * y - y * y / (R - 1)) / (R - 2)
    sq = inc * inc
    bound_loo = (n + 1) * (np.sum(sq) - sq) / (R - 1)
    ratios = var_loo / bound_loo
    se = float(np.sqrt((R - 1) / R * np.sum((ratios - ratios.mean()) ** 2)))
    return EfronSteinResult(varhat, bound, ratio, se, float(gaps.max()), inc)


def _containment_replication(task):
    body, n, master_seed, r, verts = task
    rng, _ = replication_stream(master_seed, n, r)
    pts = sample_uniform(body, n, rng)
    P = convex_hull(body.geometry, pts, body.chart_frame)
    return bool(np.all(P.contains_chart(verts, tol=0.0)))


def floating_containment_rate(body, n, c=20.0, replications=100, master_seed=0, workers=None):
    """Fraction of replications with K_[Vol(K) c log(n) / n] inside K_n; (rate, stderr)."""
    if body.dim != 2:
        raise NotImplementedError("floating containment is implemented for d = 2")
    t = body_volume(body) * c * np.log(n) / n
    fb = floating_body_2d(body, t)
    if fb.is_empty:
        return 1.0, 0.0
    tasks = [(body, n, master_seed, r, fb.chart_vertices) for r in range(replications)]
    hits = np.array(run_tasks(_containment_replication, tasks, workers), dtype=float)
    rate = float(hits.mean())
    return rate, float(np.sqrt(rate * (1.0 - rate) / replications))


def missed_volume_path(body, n_grid, master_seed):
    """Missed volume of the hulls of nested prefixes of one sample path."""
    n_grid = [int(n) for n in n_grid]
    rng, _ = replication_stream(master_seed, max(n_grid), 0)
    pts = sample_uniform(body, max(n_grid), rng)
    V = body_volume(body)
    return np.array([
        V - polytope_volume(convex_hull(body.geometry, pts[:n], body.chart_frame))[0]
        for n in n_grid
    ])


# ---------------------------------------------------------------- regression


def fit_scaling(points):
    """OLS fit of log value against log n with a 95% t-interval on the slope."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("fit_scaling needs at least 3 points")
    if any(v <= 0 or n <= 0 for n, v in pts):
        raise ValueError("fit_scaling needs positive n and values")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    tq = stats.t.ppf(0.975, len(pts) - 2)
    return ScalingFit(
        slope=float(res.slope),
        intercept=float(res.intercept),
        ci95=float(tq * res.stderr),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        points=len(pts),
    )


def summaries_fit(summaries, statistic, target="mean"):
    rows = [s for s in summaries if s.statistic == Statistic(statistic).value]
    key = "mean" if target == "mean" else "var"
    return fit_scaling([(s.n, getattr(s, key)) for s in rows])
