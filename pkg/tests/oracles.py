"""Independent oracles used by the test suite.

Everything here is written from the mathematical definitions, separately
from the library implementation, so agreement is evidence rather than
tautology:

- exact incircle/orientation signs via stdlib rational arithmetic,
- an O(n^4)-style brute-force Delaunay edge oracle (an edge is Delaunay
  iff some circumdisk through it and a third point is empty),
- an exact empty-circumdisk audit of a triangulation, accelerated with a
  KD-tree candidate search but decided by exact arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

# float filter: trust the float determinant when it clears this relative slack
_FILTER = 1e-9


def exact_orient(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    d = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (d > 0) - (d < 0)


def exact_incircle(a, b, c, p) -> int:
    """Sign of the raw 3x3 lifted incircle determinant (rows a-p, b-p, c-p)."""
    rows = []
    px, py = Fraction(p[0]), Fraction(p[1])
    for q in (a, b, c):
        qx, qy = Fraction(q[0]) - px, Fraction(q[1]) - py
        rows.append((qx, qy, qx * qx + qy * qy))
    (ax, ay, az), (bx, by, bz), (cx, cy, cz) = rows
    d = ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx)
    return (d > 0) - (d < 0)


def _incircle_dets(tri_pts: np.ndarray, query: np.ndarray):
    """(det, magnitude) of the lifted determinant for triples x queries.

    tri_pts: (T, 3, 2); query: (T, P, 2) or (1, P, 2) broadcastable.
    magnitude is the same polynomial with absolute values, for filtering.
    """
    rel = tri_pts[:, :, None, :] - query[:, None, :, :]  # (T, 3, P, 2)
    x, y = rel[..., 0], rel[..., 1]
    z = x * x + y * y
    ax, ay, az = x[:, 0], y[:, 0], z[:, 0]
    bx, by, bz = x[:, 1], y[:, 1], z[:, 1]
    cx, cy, cz = x[:, 2], y[:, 2], z[:, 2]
    det = ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx)
    mag = (
        np.abs(ax) * (np.abs(by * cz) + np.abs(bz * cy))
        + np.abs(ay) * (np.abs(bx * cz) + np.abs(bz * cx))
        + np.abs(az) * (np.abs(bx * cy) + np.abs(by * cx))
    )
    return det, mag


def brute_force_delaunay_edges(points: np.ndarray) -> set:
    """{(i, j), i < j} with an empty open circumdisk through a third point.

    O(n^3) circumdisks, each tested against all points; float fast path with
    exact rational fallback near the decision boundary.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        return set()
    if n == 2:
        return {(0, 1)}
    triples = np.array(list(combinations(range(n), 3)))
    tri_pts = pts[triples]  # (T, 3, 2)
    a, b, c = tri_pts[:, 0], tri_pts[:, 1], tri_pts[:, 2]
    orient = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    omag = np.abs(b[:, 0] - a[:, 0]) * np.abs(c[:, 1] - a[:, 1]) + np.abs(
        b[:, 1] - a[:, 1]
    ) * np.abs(c[:, 0] - a[:, 0])
    osign = np.sign(orient)
    unsure_o = np.abs(orient) <= _FILTER * omag
    for t in np.flatnonzero(unsure_o):
        osign[t] = exact_orient(*tri_pts[t])
    det, mag = _incircle_dets(tri_pts, pts[None, :, :])
    inside = osign[:, None] * det > _FILTER * mag
    unsure = (np.abs(det) <= _FILTER * mag) & (osign != 0)[:, None]
    for t, p in zip(*np.nonzero(unsure)):
        if p in triples[t]:
            continue
        s = exact_incircle(*tri_pts[t], pts[p]) * osign[t]
        inside[t, p] = s > 0
    own = np.zeros((len(triples), n), dtype=bool)
    own[np.arange(len(triples))[:, None], triples] = True
    empty = (osign != 0) & ~np.any(inside & ~own, axis=1)
    edges = set()
    for i, j, k in triples[empty]:
        edges.update({(i, j), (i, k), (j, k)})
    return edges


def empty_circumdisk_violations(points: np.ndarray, triangles: np.ndarray) -> int:
    """Count (triangle, point) pairs with the point strictly inside the
    circumdisk; exact arithmetic on KD-tree candidates only."""
    pts = np.asarray(points, dtype=float)
    tris = np.asarray(triangles, dtype=int)
    if len(tris) == 0:
        return 0
    tree = cKDTree(pts)
    tri_pts = pts[tris]
    a, b, c = tri_pts[:, 0], tri_pts[:, 1], tri_pts[:, 2]
    # float circumcenters only steer the candidate search; the decision below
    # is exact, and the radius is inflated so no true violator can be missed
    d = 2.0 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1]) + c[:, 0] * (a[:, 1] - b[:, 1]))
    asq = np.sum(a * a, axis=1)
    bsq = np.sum(b * b, axis=1)
    csq = np.sum(c * c, axis=1)
    ux = (asq * (b[:, 1] - c[:, 1]) + bsq * (c[:, 1] - a[:, 1]) + csq * (a[:, 1] - b[:, 1])) / d
    uy = (asq * (c[:, 0] - b[:, 0]) + bsq * (a[:, 0] - c[:, 0]) + csq * (b[:, 0] - a[:, 0])) / d
    centers = np.stack([ux, uy], axis=1)
    radii = np.sqrt(np.sum((a - centers) ** 2, axis=1))
    violations = 0
    for t in range(len(tris)):
        cand = tree.query_ball_point(centers[t], radii[t] * (1.0 + 1e-9) + 1e-12)
        members = set(int(v) for v in tris[t])
        for p in cand:
            if p in members:
                continue
            tp = tri_pts[t][None, :, :]
            det, mag = _incircle_dets(tp, pts[p][None, None, :])
            o = exact_orient(a[t], b[t], c[t])
            val = float(det[0, 0])
            if abs(val) <= _FILTER * float(mag[0, 0]):
                s = exact_incircle(a[t], b[t], c[t], pts[p]) * o
            else:
                s = (val > 0) - (val < 0)
                s *= o
            if s > 0:
                violations += 1
    return violations
