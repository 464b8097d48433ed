"""Convex test bodies, their chart regions, bounding caps and spherical polarity."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import (
    Geometry,
    Kind,
    ALGEBRAIC_TOL,
    ball_chart_radius,
    from_chart,
    geodesic_distance,
    isometry_to_pole,
    rotation_to_pole,
    to_chart,
)
from .hull import GeodesicPolytope, convex_hull, hull_chart, polytope_from_chart

MEMBERSHIP_TOL = 1e-12
ELLIPSE_POLAR_DIRECTIONS = 4096


class UnsupportedOperation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GeodesicBall:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True, eq=False)
class ChartEllipse:
    """Ellipse in the chart; ``angle`` rotates the first semi-axis off the x-axis."""

    center: np.ndarray
    semi_axes: np.ndarray
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "semi_axes", np.asarray(self.semi_axes, dtype=float))
        if self.center.shape != (2,) or self.semi_axes.shape != (2,):
            raise ValueError("ChartEllipse is defined for d = 2 only")
        if np.any(self.semi_axes <= 0):
            raise ValueError("semi-axes must be positive")

    @property
    def matrix(self):
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]]) * self.semi_axes[None, :]


@dataclass(frozen=True, eq=False)
class ChartPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.atleast_2d(np.asarray(self.vertices, dtype=float)))


@dataclass(frozen=True, eq=False)
class EllipsoidRegion:
    """Chart region {q + A x : |x| <= 1}."""

    center: np.ndarray
    matrix: np.ndarray

    def support(self, normals):
        normals = np.atleast_2d(normals)
        return normals @ self.center + np.linalg.norm(normals @ self.matrix, axis=1)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        p = np.atleast_2d(p)
        x = np.linalg.solve(self.matrix, (p - self.center).T).T
        return np.sum(x * x, axis=1) <= 1.0 + tol

    def boundary(self, k):
        ang = 2.0 * np.pi * np.arange(k) / k
        return self.center + np.column_stack([np.cos(ang), np.sin(ang)]) @ self.matrix.T


@dataclass(frozen=True, eq=False)
class PolygonRegion:
    """Convex chart polygon with counterclockwise vertices (or a 3-d polytope)."""

    vertices: np.ndarray
    facets: np.ndarray
    normals: np.ndarray = field(repr=False, default=None)
    offsets: np.ndarray = field(repr=False, default=None)

    def support(self, normals):
        return np.max(np.atleast_2d(normals) @ self.vertices.T, axis=1)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        p = np.atleast_2d(p)
        return np.all(p @ self.normals.T - self.offsets <= tol, axis=1)


@dataclass(frozen=True, eq=False)
class ConvexBodySpec:
    """A geodesically convex body.

    Chart shapes are interpreted in the chart ``gnomonic(frame @ x)``; a
    geodesic ball uses the frame that moves its centre to the chart centre.
    """

    geometry: Geometry
    shape: object
    frame: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        validate_body(self)

    @property
    def dim(self):
        return self.geometry.dim

    @property
    def chart_frame(self):
        if isinstance(self.shape, GeodesicBall):
            if "frame" not in self._cache:
                self._cache["frame"] = isometry_to_pole(self.geometry, self.shape.center)
            return self._cache["frame"]
        return self.frame

    @property
    def region(self):
        if "region" not in self._cache:
            self._cache["region"] = _make_region(self)
        return self._cache["region"]

    def to_chart(self, x):
        return to_chart(self.geometry, x, self.chart_frame)

    def from_chart(self, p):
        return from_chart(self.geometry, p, self.chart_frame)


def _make_region(body):
    g = body.geometry
    s = body.shape
    if isinstance(s, GeodesicBall):
        rho = ball_chart_radius(g, s.radius)
        return EllipsoidRegion(np.zeros(g.dim), rho * np.eye(g.dim))
    if isinstance(s, ChartEllipse):
        return EllipsoidRegion(s.center, s.matrix)
    idx, facets = hull_chart(s.vertices)
    verts = s.vertices[idx]
    poly = GeodesicPolytope(g, verts, facets)
    normals, offsets = poly.planes()
    return PolygonRegion(verts, facets, normals, offsets)


def validate_body(body):
    g = body.geometry
    s = body.shape
    d = g.dim
    if isinstance(s, GeodesicBall):
        if s.center.shape != (d + 1,):
            raise ValueError(f"ball centre needs {d + 1} coordinates")
        if g.kind is Kind.SPHERICAL:
            if abs(np.linalg.norm(s.center) - 1.0) > 1e-9:
                raise ValueError("spherical ball centre must be a unit vector")
            if s.radius >= np.pi / 2:
                raise ValueError("spherical ball radius must be < pi/2")
        elif g.kind is Kind.HYPERBOLIC:
            q = np.sum(s.center[:-1] ** 2) - s.center[-1] ** 2
            if abs(q + 1.0) > 1e-9 or s.center[-1] <= 0:
                raise ValueError("hyperbolic ball centre must lie on the upper hyperboloid sheet")
        return
    if body.frame is not None and np.shape(body.frame) != (d + 1, d + 1):
        raise ValueError("frame must be a (d+1) x (d+1) matrix")
    if isinstance(s, ChartEllipse):
        if d != 2:
            raise ValueError("ChartEllipse is defined for d = 2 only")
        if g.kind is Kind.HYPERBOLIC:
            reach = np.linalg.norm(s.center) + s.semi_axes.max()
            if reach >= 1.0:
                raise ValueError("hyperbolic chart ellipse must lie inside the unit ball")
        return
    if isinstance(s, ChartPolytope):
        if s.vertices.shape[1] != d or len(s.vertices) == 0:
            raise ValueError(f"ChartPolytope needs chart vertices of length {d}")
        if g.kind is Kind.HYPERBOLIC and np.any(np.linalg.norm(s.vertices, axis=1) >= 1.0):
            raise ValueError("hyperbolic chart polytope must lie inside the unit ball")
        # lower-dimensional vertex sets are allowed (points, segments); they
        # only fail once a full-dimensional region is requested
        if len(s.vertices) >= d + 1:
            idx, _ = hull_chart(s.vertices)
            if len(idx) != len(s.vertices):
                raise ValueError("ChartPolytope vertices must be in convex position")
        return
    raise TypeError(f"unknown shape {type(s).__name__}")


def geodesic_ball(geometry, radius, center=None):
    center = geometry.pole if center is None else center
    return ConvexBodySpec(geometry, GeodesicBall(center, radius))


def chart_square(geometry, half_side, frame=None):
    h = half_side
    verts = np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
    return ConvexBodySpec(geometry, ChartPolytope(verts), frame)


def contains(body, x):
    """Membership of ambient points; boundary points count as inside."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if isinstance(body.shape, GeodesicBall):
        dist = geodesic_distance(body.geometry, x, body.shape.center)
        out = dist <= body.shape.radius + MEMBERSHIP_TOL
    else:
        y = x @ body.chart_frame.T if body.chart_frame is not None else x
        out = np.zeros(len(x), dtype=bool)
        ok = y[:, -1] > 0.0
        if np.any(ok):
            out[ok] = body.region.contains(y[ok, :-1] / y[ok, -1:])
    return bool(out[0]) if single else out


def _enclosing_ball_center(points, iterations=2000):
    """Approximate minimum enclosing ball centre (Badoiu-Clarkson iteration)."""
    c = points.mean(axis=0)
    for k in range(1, iterations + 1):
        far = points[np.argmax(np.sum((points - c) ** 2, axis=1))]
        c = c + (far - c) / (k + 1)
    return c


def bounding_cap(body):
    """A geodesic ball (centre, radius) containing the body."""
    g = body.geometry
    s = body.shape
    if isinstance(s, GeodesicBall):
        return s.center.copy(), float(s.radius)
    if isinstance(s, ChartPolytope) and len(s.vertices) < g.dim + 1:
        pts = s.vertices
        region = None
    else:
        region = body.region
        pts = region.vertices if isinstance(region, PolygonRegion) else region.boundary(512)
    if len(pts) == 1:
        return body.from_chart(pts[0]), 0.0
    if g.kind is Kind.SPHERICAL:
        # chord length is monotone in arc length, so work with ambient points
        c = _enclosing_ball_center(body.from_chart(pts))
        center = c / np.linalg.norm(c)
    else:
        center = body.from_chart(_enclosing_ball_center(pts))
    if not isinstance(region, EllipsoidRegion):
        r = float(np.max(geodesic_distance(g, body.from_chart(pts), center)))
    else:
        # refine the farthest boundary angle of the ellipse
        def neg_dist(a):
            q = region.center + region.matrix @ np.array([np.cos(a), np.sin(a)])
            return -float(geodesic_distance(g, body.from_chart(q), center))

        ang = 2.0 * np.pi * np.arange(512) / 512
        dists = geodesic_distance(g, body.from_chart(pts), center)
        k = int(np.argmax(dists))
        step = 2.0 * np.pi / 512
        res = minimize_scalar(
            neg_dist, bounds=(ang[k] - step, ang[k] + step), method="bounded",
            options={"xatol": 1e-12},
        )
        r = max(float(dists[k]), -res.fun) + 1e-9
    if g.kind is Kind.SPHERICAL and r >= np.pi / 2:
        raise ValueError("body is not contained in an open hemisphere")
    return center, r


def _outward_poles(P):
    """Unit outward poles of the facet great spheres of a spherical polytope."""
    A = P.ambient_vertices
    inner = A.mean(axis=0)
    inner /= np.linalg.norm(inner)
    d = P.dim
    poles = []
    for f in P.facets:
        M = A[f]
        # null vector of the d x (d+1) facet matrix
        _, _, vt = np.linalg.svd(M)
        n = vt[-1]
        if n @ inner > 0:
            n = -n
        poles.append(n)
    poles = np.array(poles)
    if d == 3:
        poles = _dedupe(poles)
    return poles, inner


def _dedupe(vectors, tol=1e-10):
    keep = []
    for v in vectors:
        if not any(np.linalg.norm(v - w) <= tol for w in keep):
            keep.append(v)
    return np.array(keep)


def polar_polytope(p):
    """Spherical polar of a geodesic polytope.

    Vertices of the result are the outward poles of the facet great spheres
    of ``p``. The result is charted around the antipode of ``p``'s vertex
    centroid, which keeps every pole strictly inside that chart.
    """
    if p.geometry.kind is not Kind.SPHERICAL:
        raise UnsupportedOperation("polarity is only defined on the sphere")
    if p.is_empty or len(p.chart_vertices) < p.dim + 1:
        raise ValueError("degenerate polytope has no proper polar")
    poles, inner = _outward_poles(p)
    frame = rotation_to_pole(-inner)
    return convex_hull(p.geometry, poles, frame)


def spherical_polar(body):
    g = body.geometry
    if g.kind is not Kind.SPHERICAL:
        raise UnsupportedOperation("polarity is only defined on the sphere")
    s = body.shape
    if isinstance(s, GeodesicBall):
        return ConvexBodySpec(g, GeodesicBall(-s.center, np.pi / 2 - s.radius))
    region = body.region
    if isinstance(s, ChartPolytope):
        P = GeodesicPolytope(g, region.vertices, region.facets, frame=body.chart_frame)
    else:
        pts = region.boundary(ELLIPSE_POLAR_DIRECTIONS)
        P = polytope_from_chart(g, pts, body.chart_frame)
    polar = polar_polytope(P)
    return ConvexBodySpec(g, ChartPolytope(polar.chart_vertices), polar.frame)


def body_as_polytope(body):
    """The chart polytope of a ChartPolytope body as a GeodesicPolytope."""
    region = body.region
    if not isinstance(region, PolygonRegion):
        raise TypeError("body is not a polytope")
    return GeodesicPolytope(body.geometry, region.vertices, region.facets, frame=body.chart_frame)


def polygon_approximation(body, k=4096):
    """Inscribed chart polygon of a d = 2 body (exact for polytopes)."""
    region = body.region
    if isinstance(region, PolygonRegion):
        return region.vertices
    return region.boundary(k)
