"""Convex hulls of geodesic point sets, computed in the gnomonic chart.

Geodesics are straight lines in the chart, so the geodesic hull is the
preimage of the Euclidean hull of the chart images. Only d = 2 and d = 3
are supported.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Geometry,
    Kind,
    from_chart,
    minkowski,
    to_chart,
)

HULL_EPS = 1e-12
_PREFILTER_MIN = 64
_PREFILTER_DIRECTIONS = 16


class DegenerateHullError(ValueError):
    """Raised when the chart images do not span a full-dimensional simplex."""

    def __init__(self, rank, message=None):
        self.rank = rank
        super().__init__(message or f"degenerate point set: affine rank {rank}")


@dataclass(frozen=True, eq=False)
class GeodesicPolytope:
    """Geodesic hull stored by its chart vertices.

    ``facets`` holds vertex indices: directed edges in counterclockwise order
    for d = 2, outward oriented triangles for d = 3. ``frame`` is the ambient
    isometry applied before the gnomonic chart (identity when None).
    """

    geometry: Geometry
    chart_vertices: np.ndarray
    facets: np.ndarray
    provenance: np.ndarray | None = None
    frame: np.ndarray | None = None
    _planes: tuple | None = field(default=None, repr=False)

    @property
    def dim(self):
        return self.geometry.dim

    @property
    def is_empty(self):
        return len(self.chart_vertices) == 0

    @property
    def ambient_vertices(self):
        return from_chart(self.geometry, self.chart_vertices, self.frame)

    @property
    def chart_centroid(self):
        return self.chart_vertices.mean(axis=0)

    def planes(self):
        """Unit outward normals and offsets of the facet hyperplanes in the chart."""
        if self._planes is None:
            normals, offsets = _facet_planes(self.chart_vertices, self.facets)
            object.__setattr__(self, "_planes", (normals, offsets))
        return self._planes

    def contains_chart(self, q, tol=1e-10):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        if self.is_empty:
            return np.zeros(len(q), dtype=bool)
        normals, offsets = self.planes()
        return np.all(q @ normals.T - offsets <= tol, axis=1)

    def contains(self, x, tol=1e-10):
        """Membership of ambient points (points outside the chart domain are outside)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = x @ self.frame.T if self.frame is not None else x
        ok = y[:, -1] > 0.0
        out = np.zeros(len(x), dtype=bool)
        if np.any(ok):
            out[ok] = self.contains_chart(y[ok, :-1] / y[ok, -1:], tol)
        return out


def _facet_planes(vertices, facets):
    if vertices.shape[1] == 2:
        a = vertices[facets[:, 0]]
        b = vertices[facets[:, 1]]
        e = b - a
        n = np.column_stack([e[:, 1], -e[:, 0]])
    else:
        a = vertices[facets[:, 0]]
        n = np.cross(vertices[facets[:, 1]] - a, vertices[facets[:, 2]] - a)
    n = n / np.linalg.norm(n, axis=1)[:, None]
    return n, np.sum(n * a, axis=1)


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _affine_rank(points, tol):
    if len(points) == 0:
        return -1
    centered = points - points[0]
    s = np.linalg.svd(centered, compute_uv=False)
    scale = max(1.0, float(np.abs(points).max()))
    return int(np.sum(s > tol * scale))


def _monotone_chain(points, order):
    """Andrew's monotone chain over the given presorted index order; returns CCW indices."""
    pts = points.tolist()
    lower = []
    for i in order:
        p = pts[i]
        while len(lower) >= 2 and _cross2(pts[lower[-2]], pts[lower[-1]], p) <= HULL_EPS:
            lower.pop()
        lower.append(i)
    upper = []
    for i in reversed(order):
        p = pts[i]
        while len(upper) >= 2 and _cross2(pts[upper[-2]], pts[upper[-1]], p) <= HULL_EPS:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def _prefilter_2d(points):
    """Indices that might be hull vertices (Akl-Toussaint throw-away heuristic)."""
    ang = np.linspace(0.0, 2.0 * np.pi, _PREFILTER_DIRECTIONS, endpoint=False)
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    extreme = np.unique(np.argmax(points @ dirs.T, axis=0))
    if len(extreme) < 3:
        return np.arange(len(points))
    sub = points[extreme]
    order = np.lexsort((extreme, sub[:, 1], sub[:, 0]))
    ring = extreme[_monotone_chain(sub, order.tolist())]
    if len(ring) < 3:
        return np.arange(len(points))
    a = points[ring]
    b = np.roll(a, -1, axis=0)
    e = b - a
    # strictly inside every edge of the inner polygon by a safety margin
    cross = e[:, 0][None, :] * (points[:, 1][:, None] - a[:, 1][None, :]) - e[:, 1][None, :] * (
        points[:, 0][:, None] - a[:, 0][None, :]
    )
    margin = 1e3 * HULL_EPS * max(1.0, float(np.abs(points).max()))
    inside = np.all(cross > margin * np.linalg.norm(e, axis=1)[None, :], axis=1)
    return np.flatnonzero(~inside)


def hull_2d(points):
    """Counterclockwise hull vertex indices of planar points.

    Ties in the sort are broken by input index, and collinear boundary points
    are not reported as vertices.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < 3:
        raise DegenerateHullError(_affine_rank(points, HULL_EPS))
    cand = _prefilter_2d(points) if n > _PREFILTER_MIN else np.arange(n)
    sub = points[cand]
    order = np.lexsort((cand, sub[:, 1], sub[:, 0]))
    idx = cand[_monotone_chain(sub, order.tolist())] if len(cand) else cand
    if len(idx) < 3:
        raise DegenerateHullError(_affine_rank(points, 1e-9))
    return np.asarray(idx, dtype=int)


class _Hull3:
    """Randomized incremental 3-d hull with one conflict facet per outside point."""

    def __init__(self, points, eps):
        self.p = points
        self.eps = eps
        self.tri = []  # vertex triples
        self.nrm = []
        self.off = []
        self.alive = []
        self.edge = {}  # directed edge -> facet id
        self.conflicts = []  # facet id -> array of point ids

    def add_facet(self, a, b, c):
        p = self.p
        n = np.cross(p[b] - p[a], p[c] - p[a])
        n = n / np.linalg.norm(n)
        fid = len(self.tri)
        self.tri.append((a, b, c))
        self.nrm.append(n)
        self.off.append(float(n @ p[a]))
        self.alive.append(True)
        self.conflicts.append(None)
        self.edge[(a, b)] = fid
        self.edge[(b, c)] = fid
        self.edge[(c, a)] = fid
        return fid

    def distance(self, fid, q):
        return float(self.nrm[fid] @ self.p[q]) - self.off[fid]


def _initial_simplex(points, eps):
    scale = max(1.0, float(np.abs(points).max()))
    i0 = int(np.argmin(points[:, 0]))
    d1 = np.linalg.norm(points - points[i0], axis=1)
    i1 = int(np.argmax(d1))
    if d1[i1] <= eps * scale:
        raise DegenerateHullError(0)
    u = (points[i1] - points[i0]) / d1[i1]
    rel = points - points[i0]
    perp = rel - np.outer(rel @ u, u)
    d2 = np.linalg.norm(perp, axis=1)
    i2 = int(np.argmax(d2))
    if d2[i2] <= 1e-9 * scale:
        raise DegenerateHullError(1)
    n = np.cross(points[i1] - points[i0], points[i2] - points[i0])
    n /= np.linalg.norm(n)
    d3 = rel @ n
    i3 = int(np.argmax(np.abs(d3)))
    if abs(d3[i3]) <= 1e-9 * scale:
        raise DegenerateHullError(2)
    return i0, i1, i2, i3


def hull_3d(points, seed=0x5EED):
    """Hull of points in R^3.

    Returns ``(vertex_ids, triangles)`` with triangles given in input indices
    and oriented so their normals point outward. The insertion order is a
    permutation drawn from a fixed seed, so the output is deterministic.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < 4:
        raise DegenerateHullError(_affine_rank(points, 1e-9))
    scale = max(1.0, float(np.abs(points).max()))
    eps = HULL_EPS * scale
    i0, i1, i2, i3 = _initial_simplex(points, eps)
    H = _Hull3(points, eps)
    a, b, c = i0, i1, i2
    if (np.cross(points[b] - points[a], points[c] - points[a]) @ (points[i3] - points[a])) > 0:
        b, c = c, b
    # base triangle faces away from i3
    f_ids = [H.add_facet(a, b, c), H.add_facet(a, c, i3), H.add_facet(c, b, i3), H.add_facet(b, a, i3)]

    owner = np.full(n, -1, dtype=int)
    rest = np.setdiff1d(np.arange(n), [i0, i1, i2, i3])
    N = np.array([H.nrm[f] for f in f_ids])
    O = np.array([H.off[f] for f in f_ids])
    D = points[rest] @ N.T - O
    best = np.argmax(D, axis=1)
    out = D[np.arange(len(rest)), best] > eps
    for k, f in enumerate(f_ids):
        H.conflicts[f] = rest[out & (best == k)]
    owner[rest[out]] = np.array(f_ids)[best[out]]

    order = np.random.default_rng(seed).permutation(n)
    for q in order.tolist():
        f0 = owner[q]
        if f0 < 0 or not H.alive[f0]:
            continue
        visible = {f0}
        stack = [f0]
        horizon = []
        while stack:
            f = stack.pop()
            ta, tb, tc = H.tri[f]
            for e in ((ta, tb), (tb, tc), (tc, ta)):
                g = H.edge.get((e[1], e[0]))
                if g is None:
                    continue
                if g in visible:
                    continue
                if H.distance(g, q) > eps:
                    visible.add(g)
                    stack.append(g)
                else:
                    horizon.append(e)
        # gather conflict points of the removed facets
        pool = []
        for f in visible:
            H.alive[f] = False
            ta, tb, tc = H.tri[f]
            for e in ((ta, tb), (tb, tc), (tc, ta)):
                if H.edge.get(e) == f:
                    del H.edge[e]
            if H.conflicts[f] is not None and len(H.conflicts[f]):
                pool.append(H.conflicts[f])
            H.conflicts[f] = None
        new_ids = [H.add_facet(ea, eb, q) for ea, eb in horizon]
        owner[q] = -1
        if pool:
            cand = np.concatenate(pool)
            cand = cand[cand != q]
            if len(cand):
                N = np.array([H.nrm[f] for f in new_ids])
                O = np.array([H.off[f] for f in new_ids])
                D = points[cand] @ N.T - O
                best = np.argmax(D, axis=1)
                out = D[np.arange(len(cand)), best] > eps
                owner[cand] = -1
                owner[cand[out]] = np.array(new_ids)[best[out]]
                for k, f in enumerate(new_ids):
                    H.conflicts[f] = cand[out & (best == k)]
    tris = np.array([H.tri[f] for f in range(len(H.tri)) if H.alive[f]], dtype=int)
    verts = np.unique(tris)
    return verts, tris


def hull_chart(points):
    """Hull of chart points: returns (vertex ids into ``points``, facets in local vertex ids)."""
    points = np.asarray(points, dtype=float)
    d = points.shape[1]
    if d == 2:
        idx = hull_2d(points)
        k = len(idx)
        facets = np.column_stack([np.arange(k), (np.arange(k) + 1) % k])
        return idx, facets
    if d == 3:
        verts, tris = hull_3d(points)
        local = np.full(len(points), -1, dtype=int)
        local[verts] = np.arange(len(verts))
        return verts, local[tris]
    raise NotImplementedError(f"hulls are supported for d in {{2, 3}}, got d={d}")


def convex_hull(geometry, points, frame=None):
    """Geodesic convex hull of ambient points.

    ``provenance`` lists the input indices realised as vertices.
    """
    points = np.asarray(points, dtype=float)
    if len(points) < geometry.dim + 1:
        raise DegenerateHullError(
            max(len(points) - 1, 0), f"need at least {geometry.dim + 1} points, got {len(points)}"
        )
    chart = to_chart(geometry, points, frame)
    idx, facets = hull_chart(chart)
    return GeodesicPolytope(geometry, chart[idx], facets, provenance=idx, frame=frame)


def polytope_from_chart(geometry, chart_points, frame=None):
    """Polytope whose vertices are the extreme points among the given chart points."""
    chart_points = np.asarray(chart_points, dtype=float)
    idx, facets = hull_chart(chart_points)
    return GeodesicPolytope(geometry, chart_points[idx], facets, provenance=idx, frame=frame)


def empty_polytope(geometry, frame=None):
    d = geometry.dim
    return GeodesicPolytope(
        geometry, np.zeros((0, d)), np.zeros((0, d), dtype=int), provenance=None, frame=frame
    )


def facet_groups(p, tol=1e-10):
    """Group coplanar adjacent triangles of a 3-d polytope; returns a label per triangle."""
    tris = p.facets
    m = len(tris)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    normals, offsets = p.planes()
    owner = {}
    for f, (a, b, c) in enumerate(tris.tolist()):
        for e in ((a, b), (b, c), (c, a)):
            owner[e] = f
    v = p.chart_vertices
    scale = max(1.0, float(np.abs(v).max()))
    for f, (a, b, c) in enumerate(tris.tolist()):
        for e, opp in (((a, b), c), ((b, c), a), ((c, a), b)):
            g = owner.get((e[1], e[0]))
            if g is None or g < f:
                continue
            # the far vertex of g must lie on f's plane
            far = [w for w in tris[g] if w not in e][0]
            if abs(normals[f] @ v[far] - offsets[f]) <= tol * scale:
                parent[find(g)] = find(f)
    labels = np.array([find(i) for i in range(m)])
    _, labels = np.unique(labels, return_inverse=True)
    return labels


def f_vector(p):
    """(f_0, f_{d-1}); coplanar triangles of a 3-d polytope count as one facet."""
    if p.is_empty:
        return 0, 0
    f0 = len(p.chart_vertices)
    if p.dim == 2:
        return f0, len(p.facets)
    return f0, int(facet_groups(p).max()) + 1


def visible_facets(p, x, tol=HULL_EPS):
    """Indices of facets whose supporting chart hyperplane strictly separates x from p.

    Points within ``tol`` of a supporting hyperplane do not see that facet.
    """
    q = to_chart(p.geometry, np.asarray(x, dtype=float), p.frame)
    normals, offsets = p.planes()
    dist = normals @ q - offsets
    return np.flatnonzero(dist > tol)


def facet_cone_simplices(p, x, facets=None):
    """Chart simplices conv(F, x) for the given facets (default: the visible ones)."""
    q = to_chart(p.geometry, np.asarray(x, dtype=float), p.frame)
    if facets is None:
        facets = visible_facets(p, x)
    verts = p.chart_vertices[p.facets[facets]]
    apex = np.broadcast_to(q, (len(facets), 1, p.dim))
    return np.concatenate([verts, apex], axis=1)


def _interior_angles(geometry, A):
    """Interior angles of a convex geodesic polygon given by ambient vertices in order."""
    prev = np.roll(A, 1, axis=0)
    nxt = np.roll(A, -1, axis=0)
    if geometry.kind is Kind.SPHERICAL:
        t1 = prev - np.sum(prev * A, axis=1)[:, None] * A
        t2 = nxt - np.sum(nxt * A, axis=1)[:, None] * A
        norm = lambda v: np.sqrt(np.sum(v * v, axis=1))
    else:
        t1 = prev + minkowski(prev, A)[:, None] * A
        t2 = nxt + minkowski(nxt, A)[:, None] * A
        norm = lambda v: np.sqrt(np.maximum(minkowski(v, v), 0.0))
    n1 = norm(t1)
    n2 = norm(t2)
    if np.any(n1 == 0) or np.any(n2 == 0):
        raise ValueError("degenerate polygon: repeated vertices")
    t1 = t1 / n1[:, None]
    t2 = t2 / n2[:, None]
    return 2.0 * np.arctan2(norm(t1 - t2), norm(t1 + t2))


def gauss_bonnet_area(p):
    """Area of a geodesic polygon from its angles (shoelace for the Euclidean plane)."""
    if p.dim != 2:
        raise ValueError("gauss_bonnet_area needs d = 2")
    k = len(p.chart_vertices)
    if k < 3:
        raise ValueError("degenerate polygon")
    v = p.chart_vertices
    w = np.roll(v, -1, axis=0)
    shoelace = 0.5 * np.sum(v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0])
    if abs(shoelace) <= 1e-14 * max(1.0, float(np.abs(v).max()) ** 2):
        raise ValueError("degenerate (collinear) polygon")
    if p.geometry.kind is Kind.EUCLIDEAN:
        return float(abs(shoelace))
    angles = _interior_angles(p.geometry, p.ambient_vertices)
    total = float(np.sum(angles))
    if p.geometry.kind is Kind.SPHERICAL:
        return total - (k - 2) * np.pi
    return (k - 2) * np.pi - total
