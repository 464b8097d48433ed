"""Constructive economic cap covering of the wet part of a planar body.

Caps are marched along the boundary by their chart normal angle.
Consecutive anchors are accepted while the half-volume cap in the middle
direction stays inside both anchor caps. Every anchor cap is then dilated
to volume ``dilation * t``. The inner sets are the anchor caps cut into
cells by depth comparison. The cells are pairwise disjoint up to
boundaries, and shrinking them slightly makes them strictly disjoint.
"""

from dataclasses import dataclass, field

import numpy as np

from .bodies import EllipsoidRegion, polygon_approximation
from .measure import CapCut, body_volume, cap_offsets, cap_volumes, unit_directions
from .quadrature import integrate_once

DILATION = 6.0
SHRINK = 0.995
GRID_DIRECTIONS = 4096
LADDER_LENGTH = 120
RANDOM_CAPS = 200
WET_SAMPLES = 4000
CONTAIN_TOL = 1e-9


class CapCoverError(RuntimeError):
    def __init__(self, clause, message):
        self.clause = clause
        super().__init__(f"clause ({clause}) violated: {message}")


@dataclass(frozen=True, eq=False)
class CapCover:
    caps: list
    inner_sets: list
    t: float
    anchors: np.ndarray = field(repr=False, default=None)
    owners: np.ndarray = field(repr=False, default=None)
    anchor_offsets: np.ndarray = field(repr=False, default=None)
    report: dict = field(default_factory=dict)

    @property
    def m(self):
        return len(self.caps)

    @property
    def m_inner(self):
        return len(self.inner_sets)


def threshold(body):
    d = body.dim
    return body_volume(body) * (2.0 * d) ** (-2.0 * d)


def cap_min_linear(region, normals, offsets, a):
    """min <a_k, p> over region ∩ {<n_k, p> >= s_k}; +inf for empty caps."""
    normals = np.atleast_2d(normals)
    a = np.broadcast_to(a, normals.shape)
    if isinstance(region, EllipsoidRegion):
        A = region.matrix
        q = region.center
        alpha = a @ A
        mu = normals @ A
        mnorm = np.linalg.norm(mu, axis=1)
        mhat = mu / mnorm[:, None]
        sigma = (offsets - normals @ q) / mnorm
        anorm = np.linalg.norm(alpha, axis=1)
        xstar = -alpha / np.maximum(anorm, 1e-300)[:, None]
        inside = np.sum(mhat * xstar, axis=1) >= sigma
        perp = np.column_stack([-mhat[:, 1], mhat[:, 0]])
        h = np.sqrt(np.maximum(1.0 - sigma**2, 0.0))
        e1 = np.sum(alpha * mhat, axis=1) * sigma
        e2 = np.sum(alpha * perp, axis=1) * h
        chord_min = e1 - np.abs(e2)
        out = np.where(inside, -anorm, chord_min) + a @ q
        return np.where(sigma > 1.0, np.inf, out)
    V = region.vertices
    W = np.roll(V, -1, axis=0)
    dv = normals @ V.T - offsets[:, None]
    dw = normals @ W.T - offsets[:, None]
    av = np.einsum("kd,vd->kv", a, V)
    aw = np.einsum("kd,vd->kv", a, W)
    vals = np.where(dv >= 0.0, av, np.inf)
    crossing = (dv >= 0.0) != (dw >= 0.0)
    lam = np.where(crossing, dv / np.where(crossing, dv - dw, 1.0), 0.0)
    cross_vals = np.where(crossing, av + lam * (aw - av), np.inf)
    return np.minimum(vals.min(axis=1), cross_vals.min(axis=1))


def clip_convex(poly, normal, offset):
    """Sutherland-Hodgman clip of a convex polygon to {<n, p> >= s}."""
    if len(poly) == 0:
        return poly
    d = poly @ normal - offset
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        if d[i] >= 0.0:
            out.append(poly[i])
        if (d[i] >= 0.0) != (d[j] >= 0.0):
            lam = d[i] / (d[i] - d[j])
            out.append(poly[i] + lam * (poly[j] - poly[i]))
    return np.array(out).reshape(-1, 2)


def polygon_volume(geometry, poly):
    if len(poly) < 3:
        return 0.0
    c = poly.mean(axis=0)
    nxt = np.roll(poly, -1, axis=0)
    tris = np.stack([np.broadcast_to(c, poly.shape), poly, nxt], axis=1)
    return integrate_once(geometry, tris)


def convex_polygons_overlap(P, Q, tol=0.0):
    """Separating-axis test; touching polygons (within tol) do not overlap."""
    for poly in (P, Q):
        e = np.roll(poly, -1, axis=0) - poly
        normals = np.column_stack([e[:, 1], -e[:, 0]])
        for n in normals:
            if np.max(P @ n) <= np.min(Q @ n) + tol or np.max(Q @ n) <= np.min(P @ n) + tol:
                return False
    return True


def _direction(phi):
    return np.column_stack([np.cos(phi), np.sin(phi)])


def _march(body, t):
    """Anchor angles: each step is the largest ladder step keeping the mid cap inside both."""
    region = body.region
    steps = (np.pi / 2.0) * 2.0 ** (-np.arange(LADDER_LENGTH) / 4.0)
    anchors = [0.0]
    phi = 0.0
    s_phi = cap_offsets(body, _direction(np.array([phi])), t)[0]
    while True:
        cand = phi + steps
        mid = phi + steps / 2.0
        nb = _direction(cand)
        nm = _direction(mid)
        sb = cap_offsets(body, nb, t)
        sm = cap_offsets(body, nm, t / 2.0)
        na = np.broadcast_to(_direction(np.array([phi])), nb.shape)
        ok = (cap_min_linear(region, nm, sm, na) >= s_phi - CONTAIN_TOL) & (
            cap_min_linear(region, nm, sm, nb) >= sb - CONTAIN_TOL
        )
        good = np.flatnonzero(ok)
        if len(good) == 0:
            raise CapCoverError("iii", "no admissible marching step")
        k = good[0]
        if phi + steps[k] >= 2.0 * np.pi:
            break
        phi = float(cand[k])
        s_phi = float(sb[k])
        anchors.append(phi)
    return np.array(anchors)


def _depth_cells(geometry, outline, normals, offsets, t):
    """Cells K ∩ cap_i ∩ {depth_i >= depth_j}, shrunk toward their centroids."""
    cells = []
    keep = []
    m = len(normals)
    for i in range(m):
        poly = clip_convex(outline, normals[i], offsets[i])
        for j in range(m):
            if j == i or len(poly) == 0:
                continue
            # depth_i - depth_j >= 0 is linear in p
            dn = normals[i] - normals[j]
            ds = offsets[i] - offsets[j]
            nn = np.linalg.norm(dn)
            if nn == 0.0:
                continue
            poly = clip_convex(poly, dn / nn, ds / nn)
        if len(poly) < 3:
            continue
        c = poly.mean(axis=0)
        poly = c + SHRINK * (poly - c)
        if polygon_volume(geometry, poly) >= t / 4.0:
            cells.append(poly)
            keep.append(i)
    return cells, keep


def _sample_chart(region, outline, k, rng):
    lo = outline.min(axis=0)
    hi = outline.max(axis=0)
    out = []
    while sum(len(o) for o in out) < k:
        p = rng.uniform(lo, hi, size=(2 * k, 2))
        out.append(p[region.contains(p)])
    return np.concatenate(out)[:k]


def verify_cover(body, cover, wet_normals, wet_offsets, rng):
    """Runtime checks of the four covering clauses; raises CapCoverError."""
    region = body.region
    g = body.geometry
    t = cover.t
    cap_n = np.array([c.normal for c in cover.caps])
    cap_s = np.array([c.offset for c in cover.caps])
    report = {}

    # (i) inner sets ⊆ wet part ⊆ union of caps, by sampling
    def wet(p):
        return np.any(p @ wet_normals.T >= wet_offsets[None, :] - CONTAIN_TOL, axis=1)

    inner_pts = []
    for cell in cover.inner_sets:
        w = rng.dirichlet(np.ones(len(cell)), size=20)
        inner_pts.append(w @ cell)
    inner_pts = np.concatenate(inner_pts) if inner_pts else np.zeros((0, 2))
    if len(inner_pts) and not np.all(wet(inner_pts)):
        raise CapCoverError("i", "an inner-set point lies outside the wet part")
    outline = polygon_approximation(body)
    pts = _sample_chart(region, outline, WET_SAMPLES, rng)
    wp = pts[wet(pts)]
    covered = np.any(wp @ cap_n.T >= cap_s[None, :] - CONTAIN_TOL, axis=1)
    if not np.all(covered):
        raise CapCoverError("i", f"{np.sum(~covered)} wet-part points outside every cap")
    report["i"] = {"inner_points": len(inner_pts), "wet_points": int(len(wp))}

    # (ii) cap volumes and inner volumes
    vols = cap_volumes(body, cap_n, cap_s)
    inner_vols = np.array([polygon_volume(g, c) for c in cover.inner_sets])
    if np.any(vols > DILATION * t * (1.0 + 1e-5)):
        raise CapCoverError("ii", "a cap exceeds volume dilation * t")
    if np.any(inner_vols < t / 4.0):
        raise CapCoverError("ii", "an inner set has volume below t/4")
    report["ii"] = {"max_cap": float(vols.max() / t), "min_inner": float(inner_vols.min() / t)}

    # (iii) random caps of volume <= t lie in some cap
    ang = rng.uniform(0.0, 2.0 * np.pi, RANDOM_CAPS)
    rn = np.column_stack([np.cos(ang), np.sin(ang)])
    rv = t * rng.uniform(0.05, 1.0, RANDOM_CAPS)
    rs = cap_offsets(body, rn, rv)
    worst = -np.inf
    for k in range(RANDOM_CAPS):
        lows = cap_min_linear(region, np.repeat(rn[k:k + 1], len(cap_n), 0),
                              np.repeat(rs[k], len(cap_n)), cap_n)
        margin = np.max(lows - cap_s)
        worst = margin if k == 0 else min(worst, margin)
        if margin < -CONTAIN_TOL:
            raise CapCoverError("iii", f"random cap {k} is not inside any cap")
    report["iii"] = {"caps_tested": RANDOM_CAPS, "worst_margin": float(worst)}

    # (iv) inner sets inside their cap
    anchor_n = _direction(cover.anchors)
    for cell, i in zip(cover.inner_sets, cover.owners):
        if np.any(cell @ anchor_n[i] < cover.anchor_offsets[i] - CONTAIN_TOL):
            raise CapCoverError("iv", "an inner set leaves its cap")
        if not np.all(region.contains(cell, tol=1e-9)):
            raise CapCoverError("iv", "an inner set leaves the body")
    for a in range(len(cover.inner_sets)):
        for b in range(a + 1, len(cover.inner_sets)):
            if convex_polygons_overlap(cover.inner_sets[a], cover.inner_sets[b]):
                raise CapCoverError("iv", "inner sets overlap")
    report["iv"] = {"inner_sets": len(cover.inner_sets)}
    return report


def cap_cover_2d(body, t, dilation=DILATION, directions=GRID_DIRECTIONS, strict=True,
                 verify=True, seed=0):
    """Caps C_i of volume dilation*t and disjoint inner sets for the wet part K(t).

    ``strict`` enforces t < Vol(K) (2d)^(-2d); otherwise larger t is allowed
    and flagged in the report.
    """
    if body.dim != 2:
        raise NotImplementedError("cap covers are implemented for d = 2")
    thr = threshold(body)
    if strict and not t < thr:
        raise ValueError(f"t = {t:.4g} is not below the threshold {thr:.4g}")
    if dilation * t >= body_volume(body):
        raise ValueError("dilated caps would exceed the body volume")
    region = body.region
    angles = _march(body, t)
    a_normals = _direction(angles)
    s_anchor = cap_offsets(body, a_normals, t)
    s_dil = cap_offsets(body, a_normals, dilation * t)
    caps = [CapCut(n, s) for n, s in zip(a_normals, s_dil)]
    outline = polygon_approximation(body)
    cells, owner = _depth_cells(body.geometry, outline, a_normals, s_anchor, t)
    report = {"above_threshold": bool(t >= thr), "threshold": float(thr)}
    cover = CapCover(caps, cells, float(t), anchors=angles, owners=np.array(owner, dtype=int),
                     anchor_offsets=s_anchor, report=report)
    if verify:
        rng = np.random.default_rng(seed)
        dirs = unit_directions(directions)
        wet_n = np.concatenate([dirs, a_normals])
        wet_s = np.concatenate([cap_offsets(body, dirs, t), s_anchor])
        report["clauses"] = verify_cover(body, cover, wet_n, wet_s, rng)
    return cover
