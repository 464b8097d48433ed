"""Collapsed Gauss product rules on simplices, weighted by the chart density."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .geometry import Kind, chart_density

TRIANGLE_POINTS = 11  # exact for total degree 21
TET_POINTS = 6  # exact for total degree 11
GRADING_RATIO = 2.0


@lru_cache(maxsize=None)
def triangle_rule(m=TRIANGLE_POINTS):
    """Nodes (u, v) and weights on the reference triangle; weights sum to 1/2."""
    xs, ws = roots_jacobi(m, 1.0, 0.0)
    xl, wl = roots_legendre(m)
    s = (1.0 + xs) / 2.0
    w = (1.0 + xl) / 2.0
    S, W = np.meshgrid(s, w, indexing="ij")
    nodes = np.column_stack([S.ravel(), ((1.0 - S) * W).ravel()])
    weights = np.outer(ws, wl).ravel() / 8.0
    return nodes, weights


@lru_cache(maxsize=None)
def tet_rule(m=TET_POINTS):
    """Nodes and weights on the reference tetrahedron; weights sum to 1/6."""
    x2, w2 = roots_jacobi(m, 2.0, 0.0)
    x1, w1 = roots_jacobi(m, 1.0, 0.0)
    xl, wl = roots_legendre(m)
    s = (1.0 + x2) / 2.0
    w = (1.0 + x1) / 2.0
    q = (1.0 + xl) / 2.0
    S, W, Q = np.meshgrid(s, w, q, indexing="ij")
    nodes = np.column_stack(
        [S.ravel(), ((1.0 - S) * W).ravel(), ((1.0 - S) * (1.0 - W) * Q).ravel()]
    )
    weights = (w2[:, None, None] * w1[None, :, None] * wl[None, None, :]).ravel() / 64.0
    return nodes, weights


def _rule(d, m=None):
    if d == 2:
        return triangle_rule(m or TRIANGLE_POINTS)
    if d == 3:
        return tet_rule(m or TET_POINTS)
    raise NotImplementedError("simplex quadrature is implemented for d in {2, 3}")


def integrate_once(geometry, simplices, m=None):
    """Sum over chart simplices (shape (k, d+1, d)) of the integral of the density."""
    simplices = np.asarray(simplices, dtype=float)
    if len(simplices) == 0:
        return 0.0
    d = simplices.shape[-1]
    nodes, weights = _rule(d, m)
    base = simplices[..., 0, :]
    edges = simplices[..., 1:, :] - base[..., None, :]
    jac = np.abs(np.linalg.det(edges))
    pts = base[..., None, :] + np.einsum("qi,...id->...qd", nodes, edges)
    vals = chart_density(geometry, pts)
    return float(np.sum(jac * (vals @ weights)))


def refine(simplices):
    """Regular refinement: 4 children per triangle, 8 per tetrahedron."""
    simplices = np.asarray(simplices, dtype=float)
    d = simplices.shape[-1]
    v = [simplices[:, i, :] for i in range(d + 1)]
    mid = lambda i, j: (v[i] + v[j]) / 2.0
    if d == 2:
        m01, m12, m20 = mid(0, 1), mid(1, 2), mid(2, 0)
        kids = [
            (v[0], m01, m20),
            (m01, v[1], m12),
            (m20, m12, v[2]),
            (m01, m12, m20),
        ]
    else:
        m01, m02, m03 = mid(0, 1), mid(0, 2), mid(0, 3)
        m12, m13, m23 = mid(1, 2), mid(1, 3), mid(2, 3)
        kids = [
            (v[0], m01, m02, m03),
            (m01, v[1], m12, m13),
            (m02, m12, v[2], m23),
            (m03, m13, m23, v[3]),
            (m01, m02, m03, m13),
            (m01, m02, m12, m13),
            (m02, m03, m13, m23),
            (m02, m12, m13, m23),
        ]
    return np.concatenate([np.stack(k, axis=1) for k in kids], axis=0)


def graded_refine(simplices, kappa=GRADING_RATIO, max_rounds=60):
    """Split simplices until diameter <= kappa * (distance to the unit sphere).

    Keeps the fixed rules accurate next to the hyperbolic chart boundary,
    where the density blows up.
    """
    simplices = np.asarray(simplices, dtype=float)
    done = []
    cur = simplices
    for _ in range(max_rounds):
        if len(cur) == 0:
            break
        gaps = cur[:, :, None, :] - cur[:, None, :, :]
        diam = np.max(np.linalg.norm(gaps, axis=-1), axis=(1, 2))
        dist = 1.0 - np.max(np.linalg.norm(cur, axis=-1), axis=1)
        coarse = diam > kappa * dist
        done.append(cur[~coarse])
        cur = refine(cur[coarse]) if np.any(coarse) else cur[:0]
    done.append(cur)
    return np.concatenate(done)


def integrate_simplices(geometry, simplices, m=None):
    """Density integral with one refinement level; returns (value, |fine - coarse|)."""
    if geometry.kind is Kind.HYPERBOLIC and len(simplices):
        simplices = graded_refine(simplices)
    coarse = integrate_once(geometry, simplices, m)
    fine = integrate_once(geometry, refine(simplices), m) if len(simplices) else 0.0
    return fine, abs(fine - coarse)


def integrate_segment_batch(geometry, centers, matrices, normals, offsets, m=24):
    """Density integral over {q + A x : |x| <= 1, <n, q + A x> >= s} for a batch of cuts.

    ``centers`` (k, 2) and ``matrices`` (k, 2, 2) broadcast against the cuts.
    The segment is parametrised by x = cos(a) e + tau sin(a) e_perp which
    removes the square-root behaviour at the chord ends.
    """
    normals = np.atleast_2d(normals)
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    k = len(normals)
    centers = np.broadcast_to(centers, (k, 2))
    matrices = np.broadcast_to(matrices, (k, 2, 2))
    mvec = np.einsum("kij,ki->kj", matrices, normals)
    mnorm = np.linalg.norm(mvec, axis=1)
    e = mvec / mnorm[:, None]
    eperp = np.column_stack([-e[:, 1], e[:, 0]])
    sigma = (offsets - np.einsum("ki,ki->k", normals, centers)) / mnorm
    top = np.arccos(np.clip(sigma, -1.0, 1.0))
    out = np.zeros(k)
    live = sigma < 1.0
    if not np.any(live):
        return out
    xg, wg = roots_legendre(m)
    a = (xg[None, :] + 1.0) / 2.0 * top[live, None]  # (k, m)
    tau = xg
    ca, sa = np.cos(a), np.sin(a)
    x = (
        ca[:, :, None, None] * e[live, None, None, :]
        + (sa[:, :, None] * tau[None, None, :])[..., None] * eperp[live, None, None, :]
    )  # (k, m, m, 2)
    p = centers[live, None, None, :] + np.einsum("kij,kabj->kabi", matrices[live], x)
    vals = chart_density(geometry, p) * (sa * sa)[:, :, None]
    det = np.abs(np.linalg.det(matrices[live]))
    out[live] = det * (top[live] / 2.0) * np.einsum("kab,a,b->k", vals, wg, wg)
    return out
