"""Volumes, cap volumes, floating bodies and the mean width U1."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import linprog

from .bodies import (
    ChartPolytope,
    ConvexBodySpec,
    EllipsoidRegion,
    GeodesicBall,
    PolygonRegion,
    UnsupportedOperation,
)
from .geometry import Kind, chart_density, euclidean, sphere_surface_area
from .hull import (
    DegenerateHullError,
    GeodesicPolytope,
    empty_polytope,
    hull_2d,
    polytope_from_chart,
)
from .quadrature import (
    integrate_segment_batch,
    integrate_simplices,
    triangle_rule,
)

FLOATING_DIRECTIONS = 2048
OFFSET_RTOL = 1e-6
SEGMENT_ORDER = 24
ELLIPSE_VOLUME_ORDER = 64
HYPERBOLIC_CAP_ORDER = 24
MEAN_WIDTH_CHUNK = 1 << 16


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class CapCut:
    """The part of a body on the side {<normal, p> >= offset} of a chart line/plane."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("cap normal must be a unit vector")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))


# ---------------------------------------------------------------- volumes


def fan_simplices(p):
    """Chart simplices of the fan from the vertex centroid over the facets."""
    apex = p.chart_centroid
    verts = p.chart_vertices[p.facets]
    apexes = np.broadcast_to(apex, (len(p.facets), 1, p.dim))
    return np.concatenate([apexes, verts], axis=1)


def polytope_volume(p):
    """Density integral over the chart polytope; returns (value, error_bound)."""
    if p.is_empty or len(p.chart_vertices) < p.dim + 1:
        raise ValueError("degenerate polytope has no volume")
    if p.dim not in (2, 3):
        raise NotImplementedError("polytope volume is implemented for d in {2, 3}")
    return integrate_simplices(p.geometry, fan_simplices(p))


def ball_volume(geometry, r):
    """Volume of a geodesic ball of radius r."""
    d = geometry.dim
    kind = geometry.kind
    if d == 2:
        if kind is Kind.SPHERICAL:
            return 2.0 * np.pi * (1.0 - np.cos(r))
        if kind is Kind.HYPERBOLIC:
            return 2.0 * np.pi * (np.cosh(r) - 1.0)
        return np.pi * r * r
    area = sphere_surface_area(d - 1)
    if kind is Kind.SPHERICAL:
        f = lambda s: np.sin(s) ** (d - 1)
    elif kind is Kind.HYPERBOLIC:
        f = lambda s: np.sinh(s) ** (d - 1)
    else:
        return area * r**d / d
    val, _ = quad(f, 0.0, r, epsabs=0.0, epsrel=1e-13, limit=200)
    return area * val


def body_volume(body):
    s = body.shape
    g = body.geometry
    if "volume" in body._cache:
        return body._cache["volume"]
    if isinstance(s, GeodesicBall):
        vol = float(ball_volume(g, s.radius))
    else:
        region = body.region
        if isinstance(region, EllipsoidRegion):
            normal = np.array([[1.0, 0.0]])
            off = np.array([-np.inf])
            vol = float(
                integrate_segment_batch(g, region.center, region.matrix, normal, off,
                                        m=ELLIPSE_VOLUME_ORDER)[0]
            )
            check = float(
                integrate_segment_batch(g, region.center, region.matrix, normal, off,
                                        m=ELLIPSE_VOLUME_ORDER - 16)[0]
            )
            if abs(vol - check) > 1e-8:
                raise QuadratureError(f"ellipse volume unresolved: {vol} vs {check}")
        else:
            poly = GeodesicPolytope(g, region.vertices, region.facets)
            vol, err = polytope_volume(poly)
            if err > 1e-8:
                raise QuadratureError(f"polytope volume error bound {err:.3g} exceeds 1e-8")
    body._cache["volume"] = vol
    return vol


# ---------------------------------------------------------------- caps


def _polygon_cap_triangles(vertices, normals, offsets):
    """Fan triangles of {p in polygon : <n, p> >= s} for each cut; shape (N, k+1, 3, 2)."""
    a = vertices[None, :, :]
    b = np.roll(vertices, -1, axis=0)[None, :, :]
    da = normals @ vertices.T - offsets[:, None]
    db = np.roll(da, -1, axis=1)
    ina = da >= 0.0
    inb = db >= 0.0
    denom = np.where(ina != inb, da - db, 1.0)
    frac = np.where(ina != inb, da / denom, 0.0)
    cross = a + frac[..., None] * (b - a)
    start = np.where(ina[..., None], a, cross)
    end = np.where(inb[..., None], b, cross)
    live = ina | inb
    w = live.astype(float)
    count = 2.0 * w.sum(axis=1)
    center = (np.einsum("nk,nkd->nd", w, start + end)) / np.maximum(count, 1.0)[:, None]
    start = np.where(live[..., None], start, center[:, None, :])
    end = np.where(live[..., None], end, center[:, None, :])
    exit_mask = (ina & ~inb)[..., None]
    enter_mask = (~ina & inb)[..., None]
    exit_pt = np.sum(np.where(exit_mask, cross, 0.0), axis=1)
    enter_pt = np.sum(np.where(enter_mask, cross, 0.0), axis=1)
    has_chord = np.any(ina & ~inb, axis=1)
    exit_pt = np.where(has_chord[:, None], exit_pt, center)
    enter_pt = np.where(has_chord[:, None], enter_pt, center)
    starts = np.concatenate([start, exit_pt[:, None, :]], axis=1)
    ends = np.concatenate([end, enter_pt[:, None, :]], axis=1)
    apex = np.broadcast_to(center[:, None, :], starts.shape)
    return np.stack([apex, starts, ends], axis=2), count > 0


def _polygon_cap_volumes(geometry, vertices, normals, offsets):
    # the hyperbolic density is steep, so cap fans get a higher-order rule
    order = HYPERBOLIC_CAP_ORDER if geometry.kind is Kind.HYPERBOLIC else None
    nodes, weights = triangle_rule(order) if order else triangle_rule()
    out = np.zeros(len(normals))
    k = len(vertices) + 1
    chunk = max(1, 2_000_000 // (k * len(weights)))
    for lo in range(0, len(normals), chunk):
        sl = slice(lo, lo + chunk)
        tris, nonempty = _polygon_cap_triangles(vertices, normals[sl], offsets[sl])
        base = tris[..., 0, :]
        edges = tris[..., 1:, :] - base[..., None, :]
        jac = np.abs(np.linalg.det(edges))
        pts = base[..., None, :] + np.einsum("qi,...id->...qd", nodes, edges)
        vals = chart_density(geometry, pts) @ weights
        out[sl] = np.where(nonempty, np.sum(jac * vals, axis=1), 0.0)
    return out


def cap_volumes(body, normals, offsets):
    """Vectorised cap volumes of a d = 2 body for chart cuts {<n, p> >= s}."""
    if body.dim != 2:
        raise NotImplementedError("batched cap volumes are implemented for d = 2")
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    region = body.region
    if isinstance(region, EllipsoidRegion):
        return integrate_segment_batch(
            body.geometry, region.center, region.matrix, normals, offsets, m=SEGMENT_ORDER
        )
    return _polygon_cap_volumes(body.geometry, region.vertices, normals, offsets)


def clip_polytope_3d(vertices, normal, offset):
    """Vertices of {p in conv(vertices) : <n, p> >= s} for a 3-d chart polytope."""
    d = vertices @ normal - offset
    keep = [vertices[d >= 0]]
    for i, j in combinations(range(len(vertices)), 2):
        if (d[i] > 0) != (d[j] > 0) and d[i] != d[j] and (d[i] < 0 or d[j] < 0):
            lam = d[i] / (d[i] - d[j])
            keep.append((vertices[i] + lam * (vertices[j] - vertices[i]))[None, :])
    return np.concatenate(keep, axis=0)


def cap_volume(body, cut):
    """Volume of body ∩ {<normal, p> >= offset} in the body's chart."""
    if body.dim == 2:
        return float(cap_volumes(body, cut.normal[None, :], np.array([cut.offset]))[0])
    region = body.region
    if not isinstance(region, PolygonRegion):
        raise NotImplementedError("d = 3 cap volumes are implemented for chart polytopes")
    pts = clip_polytope_3d(region.vertices, cut.normal, cut.offset)
    if len(pts) < 4:
        return 0.0
    try:
        p = polytope_from_chart(body.geometry, pts)
    except DegenerateHullError:
        return 0.0
    return polytope_volume(p)[0]


def support(body, normals):
    return body.region.support(np.atleast_2d(normals))


def cap_offsets(body, normals, volumes, rtol=OFFSET_RTOL, max_iter=200):
    """Chart offsets s with cap volume V(n, s) = volume, for each normal (d = 2).

    Illinois regula falsi on V^(2/3) - v^(2/3) inside [-h(-n), h(n)].
    """
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    target = np.broadcast_to(np.asarray(volumes, dtype=float), (len(normals),)).copy()
    total = body_volume(body)
    if np.any(target <= 0.0) or np.any(target >= total):
        raise ValueError("cap volumes must lie in (0, Vol(K))")
    hi = support(body, normals)
    lo = -support(body, -normals)
    goal = target ** (2.0 / 3.0)
    f_lo = np.full(len(normals), total ** (2.0 / 3.0)) - goal
    f_hi = -goal
    s = np.empty(len(normals))
    done = np.zeros(len(normals), dtype=bool)
    side = np.zeros(len(normals), dtype=int)
    for _ in range(max_iter):
        act = ~done
        if not np.any(act):
            break
        x = (lo[act] * f_hi[act] - hi[act] * f_lo[act]) / (f_hi[act] - f_lo[act])
        v = cap_volumes(body, normals[act], x)
        fx = v ** (2.0 / 3.0) - goal[act]
        idx = np.flatnonzero(act)
        s[idx] = x
        ok = np.abs(v - target[act]) <= rtol * target[act]
        done[idx[ok]] = True
        pos = fx > 0  # still inside the cap region: move lo up
        i_pos = idx[pos & ~ok]
        i_neg = idx[~pos & ~ok]
        lo[i_pos] = x[pos & ~ok]
        f_lo[i_pos] = fx[pos & ~ok]
        hi[i_neg] = x[~pos & ~ok]
        f_hi[i_neg] = fx[~pos & ~ok]
        # Illinois: halve the stale endpoint when the same side moves twice
        f_hi[i_pos[side[i_pos] == 1]] /= 2.0
        f_lo[i_neg[side[i_neg] == -1]] /= 2.0
        side[i_pos] = 1
        side[i_neg] = -1
    if not np.all(done):
        raise QuadratureError(f"cap offset search did not converge for {np.sum(~done)} normals")
    return s


def unit_directions(k, phase=0.0):
    ang = phase + 2.0 * np.pi * np.arange(k) / k
    return np.column_stack([np.cos(ang), np.sin(ang)])


# ---------------------------------------------------------------- floating bodies


def halfplane_intersection(normals, offsets):
    """Vertices (CCW) of {p : <n_k, p> <= s_k}, or None when it has empty interior."""
    A = np.column_stack([normals, np.linalg.norm(normals, axis=1)])
    res = linprog(
        c=[0.0, 0.0, -1.0], A_ub=A, b_ub=offsets,
        bounds=[(None, None), (None, None), (0.0, None)], method="highs",
    )
    if res.status != 0 or res.x[2] <= 1e-12:
        return None
    z = res.x[:2]
    b = offsets - normals @ z
    dual = normals / b[:, None]
    idx = hull_2d(dual)
    act = np.asarray(idx)
    nxt = np.roll(act, -1)
    verts = np.empty((len(act), 2))
    for j, (i1, i2) in enumerate(zip(act, nxt)):
        M = np.array([normals[i1], normals[i2]])
        verts[j] = np.linalg.solve(M, np.array([b[i1], b[i2]]))
    return verts + z


def floating_body_2d(body, t, directions=FLOATING_DIRECTIONS):
    """Direction-discretised floating body K_[t] as a chart polygon.

    Returns the empty polytope when t >= Vol(K)/2, where no point survives
    every cut through it.
    """
    if body.dim != 2:
        raise NotImplementedError("floating bodies are implemented for d = 2")
    if not t > 0:
        raise ValueError("t must be positive")
    total = body_volume(body)
    if t >= total / 2.0:
        return empty_polytope(body.geometry, body.chart_frame)
    normals = unit_directions(directions)
    s = cap_offsets(body, normals, t)
    region = body.region
    if isinstance(region, PolygonRegion):
        normals = np.concatenate([normals, region.normals])
        s = np.concatenate([s, region.offsets])
    verts = halfplane_intersection(normals, s)
    if verts is None or len(verts) < 3:
        return empty_polytope(body.geometry, body.chart_frame)
    idx = hull_2d(verts)
    verts = verts[idx]
    k = len(verts)
    facets = np.column_stack([np.arange(k), (np.arange(k) + 1) % k])
    return GeodesicPolytope(body.geometry, verts, facets, frame=body.chart_frame)


def wet_part_volume(body, t, directions=FLOATING_DIRECTIONS):
    fb = floating_body_2d(body, t, directions)
    total = body_volume(body)
    if fb.is_empty:
        return total
    return max(total - polytope_volume(fb)[0], 0.0)


def cap_volume_ratio(body, t):
    """Chart Lebesgue area over curved volume, for the centred cap of volume t (d = 2).

    The cap's normal is e1 in the body's chart; used to check that the
    gnomonic chart preserves cap volumes up to bounded factors.
    """
    n = np.array([[1.0, 0.0]])
    s = cap_offsets(body, n, t)
    flat = euclidean(2)
    region = body.region
    if isinstance(region, EllipsoidRegion):
        area = integrate_segment_batch(flat, region.center, region.matrix, n, s,
                                       m=SEGMENT_ORDER)[0]
    else:
        area = _polygon_cap_volumes(flat, region.vertices, n, s)[0]
    return float(area / t)


# ---------------------------------------------------------------- mean width


def _chart_functional(frame, u):
    """Coefficients (a, b) with sign <u, x> = sign(<a, p> + b) for chart points p."""
    # <u, F^-1 y> = <F u, y> for an orthogonal frame F
    y = u if frame is None else u @ np.asarray(frame).T
    return y[:, :-1], y[:, -1]


def _hit_mask(obj, u):
    """Whether the great sphere u^perp meets obj, for each row of u."""
    if isinstance(obj, ConvexBodySpec):
        if obj.geometry.kind is not Kind.SPHERICAL:
            raise UnsupportedOperation("mean width is defined for spherical bodies")
        s = obj.shape
        if isinstance(s, GeodesicBall):
            c = s.center
            along = u @ c
            perp = np.sqrt(np.maximum(np.sum(u * u, axis=1) - along**2, 0.0))
            return np.abs(along) <= perp * np.tan(s.radius)
        if isinstance(s, ChartPolytope) and len(s.vertices) < obj.dim + 1:
            pts = s.vertices
            a, b = _chart_functional(obj.chart_frame, u)
            vals = a @ pts.T + b[:, None]
            return (vals.min(axis=1) <= 0.0) & (vals.max(axis=1) >= 0.0)
        region = obj.region
        a, b = _chart_functional(obj.chart_frame, u)
        if isinstance(region, EllipsoidRegion):
            mid = a @ region.center + b
            half = np.linalg.norm(a @ region.matrix, axis=1)
            return np.abs(mid) <= half
        pts = region.vertices
    else:
        if obj.geometry.kind is not Kind.SPHERICAL:
            raise UnsupportedOperation("mean width is defined for spherical polytopes")
        pts = obj.chart_vertices
        a, b = _chart_functional(obj.frame, u)
    centre = pts.mean(axis=0)
    radius = float(np.max(np.linalg.norm(pts - centre, axis=1)))
    mid = a @ centre + b
    reach = np.linalg.norm(a, axis=1) * radius
    hit = np.abs(mid) <= reach
    cand = np.flatnonzero(hit)
    if len(cand):
        vals = a[cand] @ pts.T + b[cand, None]
        hit[cand] = (vals.min(axis=1) <= 0.0) & (vals.max(axis=1) >= 0.0)
    return hit


def _normal_chunks(rng, samples, dim):
    done = 0
    while done < samples:
        m = min(MEAN_WIDTH_CHUNK, samples - done)
        yield rng.standard_normal((m, dim + 1))
        done += m


def mean_width_U1(obj, samples, rng_seed):
    """Monte Carlo U1: half the probability that a uniform great sphere meets obj.

    ``rng_seed`` is an int or a numpy Generator. Returns (estimate, stderr).
    """
    rng = np.random.default_rng(rng_seed)
    hits = 0
    for u in _normal_chunks(rng, samples, obj.geometry.dim):
        hits += int(np.count_nonzero(_hit_mask(obj, u)))
    p = hits / samples
    return p / 2.0, np.sqrt(p * (1.0 - p) / samples) / 2.0


def mean_width_excess(outer, inner, samples, rng_seed):
    """U1(outer) - U1(inner) with common random normals.

    Returns (excess, stderr, U1(outer), U1(inner)).
    """
    rng = np.random.default_rng(rng_seed)
    h_out = 0
    h_in = 0
    diff_sq = 0
    for u in _normal_chunks(rng, samples, outer.geometry.dim):
        a = _hit_mask(outer, u)
        b = _hit_mask(inner, u)
        h_out += int(np.count_nonzero(a))
        h_in += int(np.count_nonzero(b))
        diff_sq += int(np.count_nonzero(a != b))
    mean = (h_out - h_in) / samples
    var = max(diff_sq / samples - mean * mean, 0.0)
    return mean / 2.0, np.sqrt(var / samples) / 2.0, h_out / samples / 2.0, h_in / samples / 2.0
