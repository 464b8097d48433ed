"""Coordinate geometry of the three constant-curvature model spaces.

Points of S^d and H^d are stored as ambient (d+1)-vectors; H^d uses the
upper sheet of the hyperboloid x_1^2 + ... + x_d^2 - x_{d+1}^2 = -1.
Euclidean points are stored homogeneously as (p, 1) so that every geometry
shares the same chart map ``x -> x[:d] / x[d]``.

All functions broadcast over leading axes.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gamma

ALGEBRAIC_TOL = 1e-12
CLAMP_TOL = 1e-9


class Kind(str, Enum):
    SPHERICAL = "spherical"
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class Geometry:
    kind: Kind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def pole(self):
        e = np.zeros(self.dim + 1)
        e[-1] = 1.0
        return e

    def __str__(self):
        return f"{self.kind.value}{self.dim}"


def spherical(dim=2):
    return Geometry(Kind.SPHERICAL, dim)


def hyperbolic(dim=2):
    return Geometry(Kind.HYPERBOLIC, dim)


def euclidean(dim=2):
    return Geometry(Kind.EUCLIDEAN, dim)


def minkowski(x, y):
    """Lorentz inner product x_1 y_1 + ... + x_d y_d - x_{d+1} y_{d+1}."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.sum(x[..., :-1] * y[..., :-1], axis=-1) - x[..., -1] * y[..., -1]


def _check_ambient_shape(geometry, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != geometry.dim + 1:
        raise ValueError(
            f"ambient points of {geometry} need {geometry.dim + 1} coordinates, "
            f"got shape {x.shape}"
        )
    return x


def _check_chart_shape(geometry, p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != geometry.dim:
        raise ValueError(
            f"chart points of {geometry} need {geometry.dim} coordinates, got shape {p.shape}"
        )
    return p


def gnomonic_forward(geometry, x):
    """Central projection to the tangent chart at e_{d+1}.

    Spherical points must lie in the open upper hemisphere. Geodesics map to
    straight segments, so convexity is preserved in the chart.
    """
    x = _check_ambient_shape(geometry, x)
    last = x[..., -1]
    if geometry.kind is Kind.SPHERICAL and np.any(last <= 0.0):
        raise ValueError("spherical point outside the open upper hemisphere (x_{d+1} <= 0)")
    if geometry.kind is not Kind.SPHERICAL and np.any(last <= 0.0):
        raise ValueError("ambient point has nonpositive last coordinate")
    return x[..., :-1] / last[..., None]


def gnomonic_inverse(geometry, p):
    p = _check_chart_shape(geometry, p)
    sq = np.sum(p * p, axis=-1)
    ones = np.ones(p.shape[:-1] + (1,))
    lifted = np.concatenate([p, ones], axis=-1)
    if geometry.kind is Kind.SPHERICAL:
        return lifted / np.sqrt(1.0 + sq)[..., None]
    if geometry.kind is Kind.HYPERBOLIC:
        if np.any(sq >= 1.0):
            raise ValueError("hyperbolic chart point outside the open unit ball")
        return lifted / np.sqrt(1.0 - sq)[..., None]
    return lifted


def chart_density(geometry, p):
    """Density of the pulled-back volume measure with respect to chart Lebesgue measure."""
    p = _check_chart_shape(geometry, p)
    sq = np.sum(p * p, axis=-1)
    e = -(geometry.dim + 1) / 2.0
    if geometry.kind is Kind.SPHERICAL:
        return (1.0 + sq) ** e
    if geometry.kind is Kind.HYPERBOLIC:
        if np.any(sq >= 1.0):
            raise ValueError("hyperbolic chart point outside the open unit ball")
        return (1.0 - sq) ** e
    return np.ones_like(sq)


def geodesic_distance(geometry, x, y):
    x = _check_ambient_shape(geometry, x)
    y = _check_ambient_shape(geometry, y)
    if geometry.kind is Kind.SPHERICAL:
        ip = np.sum(x * y, axis=-1)
        if np.any(np.abs(ip) > 1.0 + CLAMP_TOL):
            raise ValueError("inner product outside [-1, 1]; points are not on the sphere")
        # chord/antichord form is stable near coincident and antipodal pairs
        return 2.0 * np.arctan2(
            np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1)
        )
    if geometry.kind is Kind.HYPERBOLIC:
        ip = -minkowski(x, y)
        if np.any(ip < 1.0 - CLAMP_TOL):
            raise ValueError("Lorentz product below 1; points are not on the hyperboloid")
        chord = np.maximum(minkowski(x - y, x - y), 0.0)
        return 2.0 * np.arcsinh(np.sqrt(chord) / 2.0)
    return np.linalg.norm(
        gnomonic_forward(geometry, x) - gnomonic_forward(geometry, y), axis=-1
    )


def _householder(w):
    w = np.asarray(w, dtype=float)
    return np.eye(len(w)) - 2.0 * np.outer(w, w) / np.dot(w, w)


def rotation_to_pole(u):
    """Proper rotation R of R^{d+1} with R @ u = e_{d+1}.

    Built from two reflections; the branch is chosen so that the reflection
    vector always has norm >= sqrt(2), including u = -e_{d+1}.
    """
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > ALGEBRAIC_TOL * 10:
        raise ValueError("rotation_to_pole needs a unit vector")
    n = len(u)
    e = np.zeros(n)
    e[-1] = 1.0
    if u[-1] >= 0.0:
        # u -> -e, then flip the last axis
        flip = np.ones(n)
        flip[-1] = -1.0
        return flip[:, None] * _householder(u + e)
    # u -> e, then a reflection that fixes e
    flip = np.ones(n)
    flip[0] = -1.0
    return flip[:, None] * _householder(u - e)


def boost_to_pole(c):
    """Lorentz transformation L (orthochronous) with L @ c = e_{d+1}."""
    c = np.asarray(c, dtype=float)
    s = c[:-1]
    c0 = c[-1]
    n = len(c)
    L = np.empty((n, n))
    L[:-1, :-1] = np.eye(n - 1) + np.outer(s, s) / (1.0 + c0)
    L[:-1, -1] = -s
    L[-1, :-1] = -s
    L[-1, -1] = c0
    return L


def isometry_to_pole(geometry, c):
    """Ambient isometry mapping the point c to the chart center."""
    c = _check_ambient_shape(geometry, c)
    if geometry.kind is Kind.SPHERICAL:
        return rotation_to_pole(c / np.linalg.norm(c))
    if geometry.kind is Kind.HYPERBOLIC:
        return boost_to_pole(c)
    T = np.eye(geometry.dim + 1)
    T[:-1, -1] = -c[:-1] / c[-1]
    return T


def isometry_inverse(geometry, F):
    F = np.asarray(F, dtype=float)
    if geometry.kind is Kind.SPHERICAL:
        return F.T
    if geometry.kind is Kind.HYPERBOLIC:
        J = np.ones(F.shape[0])
        J[-1] = -1.0
        return (J[:, None] * F.T) * J[None, :]
    return np.linalg.inv(F)


def to_chart(geometry, x, frame=None):
    x = _check_ambient_shape(geometry, x)
    if frame is not None:
        x = x @ np.asarray(frame).T
    return gnomonic_forward(geometry, x)


def from_chart(geometry, p, frame=None):
    x = gnomonic_inverse(geometry, p)
    if frame is not None:
        x = x @ isometry_inverse(geometry, frame).T
    return x


def chartable(geometry, x, frame=None):
    """Mask of points that the (framed) chart can represent."""
    x = _check_ambient_shape(geometry, x)
    if frame is not None:
        x = x @ np.asarray(frame).T
    return x[..., -1] > 0.0


def sphere_surface_area(d):
    """Surface area of the unit sphere S^d in R^{d+1}."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return 2.0 * np.pi ** ((d + 1) / 2.0) / gamma((d + 1) / 2.0)


def ball_chart_radius(geometry, r):
    """Chart radius of a geodesic ball of radius r centred at the chart centre."""
    if geometry.kind is Kind.SPHERICAL:
        return float(np.tan(r))
    if geometry.kind is Kind.HYPERBOLIC:
        return float(np.tanh(r))
    return float(r)
