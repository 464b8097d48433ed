"""Random polytopes in spherical, hyperbolic and Euclidean convex bodies."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    Geometry,
    Kind,
    euclidean,
    geodesic_distance,
    gnomonic_forward,
    gnomonic_inverse,
    hyperbolic,
    spherical,
)
from .bodies import ConvexBodySpec, chart_square, geodesic_ball, spherical_polar  # noqa: E402
from .hull import GeodesicPolytope, convex_hull  # noqa: E402
from .measure import body_volume, cap_volume, floating_body_2d, polytope_volume  # noqa: E402

__all__ = [
    "ConvexBodySpec",
    "GeodesicPolytope",
    "Geometry",
    "Kind",
    "body_volume",
    "cap_volume",
    "chart_square",
    "convex_hull",
    "euclidean",
    "floating_body_2d",
    "geodesic_ball",
    "geodesic_distance",
    "gnomonic_forward",
    "gnomonic_inverse",
    "hyperbolic",
    "polytope_volume",
    "spherical",
    "spherical_polar",
]
