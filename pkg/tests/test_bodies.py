import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geohull.bodies import (
    ChartEllipse,
    ChartPolytope,
    ConvexBodySpec,
    GeodesicBall,
    UnsupportedOperation,
    bounding_cap,
    chart_square,
    contains,
    geodesic_ball,
    polar_polytope,
    spherical_polar,
)
from geohull.geometry import (
    geodesic_distance,
    gnomonic_forward,
    gnomonic_inverse,
    hyperbolic,
    rotation_to_pole,
    spherical,
)
from geohull.hull import convex_hull, f_vector, polytope_from_chart
from geohull.montecarlo import sample_uniform

S2 = spherical(2)
H2 = hyperbolic(2)
E3 = np.array([0, 0, 1.0])


def cap_point(theta, phi=np.pi / 2):
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def random_sphere_points(k, rng):
    x = rng.normal(size=(k, 3))
    return x / np.linalg.norm(x, axis=1)[:, None]


class TestValidation:
    def test_spherical_radius_limit(self):
        with pytest.raises(ValueError):
            geodesic_ball(S2, np.pi / 2)

    def test_hyperbolic_centre_on_sheet(self):
        with pytest.raises(ValueError):
            ConvexBodySpec(H2, GeodesicBall([0, 0, 2.0], 0.5))

    def test_hyperbolic_chart_shapes_inside_ball(self):
        with pytest.raises(ValueError):
            chart_square(H2, 0.8)
        with pytest.raises(ValueError):
            ConvexBodySpec(H2, ChartEllipse([0.5, 0], [0.6, 0.1]))

    def test_polytope_vertices_in_convex_position(self):
        with pytest.raises(ValueError):
            ConvexBodySpec(S2, ChartPolytope([[0, 0], [1, 0], [0, 1], [0.1, 0.1]]))

    def test_ellipse_needs_d2(self):
        with pytest.raises(ValueError):
            ChartEllipse([0, 0, 0], [1, 1, 1])


class TestContains:
    def test_ball(self):
        body = geodesic_ball(S2, 0.5)
        assert contains(body, cap_point(0.3))
        assert not contains(body, cap_point(0.6))

    def test_square(self):
        body = ConvexBodySpec(S2, ChartPolytope([[0, 0], [1, 0], [1, 1], [0, 1]]))
        assert contains(body, gnomonic_inverse(S2, [0.25, 0.25]))
        assert not contains(body, gnomonic_inverse(S2, [1.25, 0.25]))

    def test_boundary_counts_inside(self):
        body = geodesic_ball(S2, 0.5)
        assert contains(body, cap_point(0.5))

    def test_lower_hemisphere_outside_chart_body(self):
        body = chart_square(S2, 0.5)
        assert not contains(body, -E3)

    def test_agrees_with_chart_membership(self):
        rng = np.random.default_rng(0)
        frame = rotation_to_pole(random_sphere_points(1, rng)[0])
        body = ConvexBodySpec(S2, ChartEllipse([0.2, -0.1], [0.7, 0.3], 0.5), frame)
        x = random_sphere_points(10_000, rng)
        y = x @ frame.T
        up = y[:, 2] > 0
        p = y[up, :2] / y[up, 2:]
        q = np.linalg.solve(body.shape.matrix, (p - body.shape.center).T).T
        expect = np.zeros(len(x), dtype=bool)
        expect[up] = np.sum(q * q, axis=1) <= 1
        assert np.array_equal(contains(body, x), expect)


class TestBoundingCap:
    def test_ball_exact(self):
        c = cap_point(0.4, 1.0)
        assert bounding_cap(geodesic_ball(S2, 0.3, c))[1] == 0.3
        assert np.array_equal(bounding_cap(geodesic_ball(S2, 0.3, c))[0], c)

    def test_single_vertex(self):
        body = ConvexBodySpec(S2, ChartPolytope([[0.3, -0.2]]))
        c, r = bounding_cap(body)
        assert r == 0.0
        assert np.allclose(c, gnomonic_inverse(S2, [0.3, -0.2]))

    @pytest.mark.parametrize("body", [
        chart_square(S2, 0.2),
        ConvexBodySpec(S2, ChartEllipse([0.3, 0.1], [0.8, 0.2], 1.0)),
        ConvexBodySpec(H2, ChartPolytope([[0, 0], [0.6, 0.1], [0.2, 0.7]])),
    ])
    def test_contains_samples(self, body):
        c, r = bounding_cap(body)
        x = sample_uniform(body, 10_000, np.random.default_rng(2))
        assert np.all(geodesic_distance(body.geometry, x, c) <= r + 1e-12)
        if body.geometry.kind.value == "spherical":
            assert r < np.pi / 2


class TestPolarity:
    def test_ball(self):
        p = spherical_polar(geodesic_ball(S2, 0.3))
        assert np.allclose(p.shape.center, -E3)
        assert p.shape.radius == pytest.approx(np.pi / 2 - 0.3)

    def test_ball_involution(self):
        c = cap_point(0.7, 2.0)
        b = spherical_polar(spherical_polar(geodesic_ball(S2, 0.4, c)))
        assert np.allclose(b.shape.center, c) and b.shape.radius == pytest.approx(0.4)

    def test_hyperbolic_unsupported(self):
        with pytest.raises(UnsupportedOperation):
            spherical_polar(geodesic_ball(H2, 0.4))

    def test_triangle_polar_points_are_nonpositive(self):
        rng = np.random.default_rng(4)
        verts = np.array([[0.3, 0.0], [-0.15, 0.26], [-0.1, -0.3]])
        K = ConvexBodySpec(S2, ChartPolytope(verts))
        Kstar = spherical_polar(K)
        assert len(Kstar.shape.vertices) == 3
        y = sample_uniform(Kstar, 1000, rng)
        xs = gnomonic_inverse(S2, verts)
        assert np.max(y @ xs.T) <= 1e-12

    def test_polar_vertices_are_facet_poles(self):
        verts = np.array([[0.1, 0.2], [0.9, -0.1], [-0.3, 0.7]])
        P = polytope_from_chart(S2, verts)
        Q = polar_polytope(P)
        A = P.ambient_vertices
        for pole in Q.ambient_vertices:
            # each pole is orthogonal to two vertices and negative on the third
            ip = A @ pole
            assert np.sum(np.abs(ip) < 1e-12) == 2
            assert np.min(ip) < 0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(3, 40), st.integers(0, 2**32 - 1))
    def test_involution_and_counts(self, n, seed):
        rng = np.random.default_rng(seed)
        c = random_sphere_points(1, rng)[0]
        frame = rotation_to_pole(c)
        pts = gnomonic_inverse(S2, rng.uniform(-1.5, 1.5, size=(n, 2))) @ frame
        try:
            P = convex_hull(S2, pts, frame)
        except ValueError:
            return
        Q = polar_polytope(P)
        assert f_vector(Q)[1] == f_vector(P)[0]
        assert f_vector(Q)[0] == f_vector(P)[1]
        R = polar_polytope(Q)
        a = P.ambient_vertices
        b = R.ambient_vertices
        assert len(a) == len(b)
        gap = np.max(np.min(np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1), axis=1))
        assert gap < 1e-10

    def test_octagon_counts(self):
        ang = np.sort(np.random.default_rng(7).uniform(0, 2 * np.pi, 8))
        P = polytope_from_chart(S2, 0.8 * np.column_stack([np.cos(ang), np.sin(ang)]))
        assert f_vector(P)[0] == 8
        assert f_vector(polar_polytope(P))[1] == 8

    def test_inclusion_reversal(self):
        rng = np.random.default_rng(9)
        small = geodesic_ball(S2, 0.3)
        big = geodesic_ball(S2, 0.6)
        y = sample_uniform(spherical_polar(big), 2000, rng)
        assert np.all(contains(spherical_polar(small), y))

    def test_square_polar_contains_polar_of_bigger_square(self):
        rng = np.random.default_rng(10)
        small = spherical_polar(chart_square(S2, 0.2))
        big = spherical_polar(chart_square(S2, 0.5))
        y = sample_uniform(big, 2000, rng)
        assert np.all(contains(small, y))

    def test_ellipse_polar_is_discretised_polytope(self):
        K = ConvexBodySpec(S2, ChartEllipse([0.1, 0], [0.5, 0.3], 0.2))
        Kstar = spherical_polar(K)
        assert isinstance(Kstar.shape, ChartPolytope)
        y = sample_uniform(Kstar, 500, np.random.default_rng(1))
        x = sample_uniform(K, 500, np.random.default_rng(2))
        assert np.max(x @ y.T) <= 1e-9


def test_chart_of_ball_is_disk():
    body = geodesic_ball(S2, 0.8, cap_point(0.5, 0.3))
    x = sample_uniform(body, 500, np.random.default_rng(0))
    p = gnomonic_forward(S2, x @ body.chart_frame.T)
    assert np.max(np.linalg.norm(p, axis=1)) <= np.tan(0.8) + 1e-12
