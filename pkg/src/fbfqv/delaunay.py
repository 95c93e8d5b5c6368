"""Incremental Delaunay triangulation with exact predicates, plus extraction
of anchored edges (lex-min endpoint in an anchor window) and anchored triples.

Algorithm: Bowyer-Watson insertion.  The hull is capped by "ghost" triangles
(g0, g1, -1) whose directed edge g0->g1 runs along the hull with the interior
on its right; a ghost is in conflict with a new point q iff q lies strictly
left of g0->g1, or on the open segment (g0, g1).  This makes cavity collection
and re-fanning uniform for interior and exterior insertions.

Cocircular ties are resolved by the symbolic perturbation in
predicates.incircle_sos (lower vertex index = larger lift), which makes the
triangulation of a given indexed point set unique.  Insertion therefore may
use any order; we insert along a serpentine grid order for walk locality, and
the exposed triangle list is canonicalized (sorted triples, lexicographic
list order), so the output is a pure function of the input configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, NumericalError
from .ioutil import write_csv
from .pointprocess import PointConfiguration, Window, lex_less_rows
from .predicates import incircle_sos, orient2d

__all__ = [
    "Triangulation",
    "AnchoredEdge",
    "AnchoredTriple",
    "EdgeSet",
    "TripleSet",
    "triangulate",
    "anchored_edges",
    "anchored_triples",
    "boundary_stability_check",
    "default_margin",
    "DiagnosticReport",
]

GHOST = -1


# ---------------------------------------------------------------------------
# builder


class _Builder:
    """Mutable triangle soup during incremental construction.

    Triangles are parallel lists (v0,v1,v2 vertices; n0,n1,n2 neighbors across
    the edge opposite each vertex).  Ghosts have v2 == GHOST.
    """

    def __init__(self, px, py):
        self.px = px
        self.py = py
        self.v0 = []
        self.v1 = []
        self.v2 = []
        self.n0 = []
        self.n1 = []
        self.n2 = []
        self.alive = []
        self.free = []
        self.last = 0

    # -- low level ----------------------------------------------------------
    def _alloc(self, a, b, c):
        if self.free:
            t = self.free.pop()
            self.v0[t] = a
            self.v1[t] = b
            self.v2[t] = c
            self.n0[t] = self.n1[t] = self.n2[t] = -2
            self.alive[t] = True
        else:
            t = len(self.v0)
            self.v0.append(a)
            self.v1.append(b)
            self.v2.append(c)
            self.n0.append(-2)
            self.n1.append(-2)
            self.n2.append(-2)
            self.alive.append(True)
        return t

    def _set_n(self, t, slot, u):
        if slot == 0:
            self.n0[t] = u
        elif slot == 1:
            self.n1[t] = u
        else:
            self.n2[t] = u

    def _link_group(self, tris):
        """Mutually link freshly built triangles along shared directed edges."""
        emap = {}
        for t in tris:
            vs = (self.v0[t], self.v1[t], self.v2[t])
            for s in range(3):
                x = vs[(s + 1) % 3]
                y = vs[(s + 2) % 3]
                other = emap.pop((y, x), None)
                if other is not None:
                    u, us = other
                    self._set_n(t, s, u)
                    self._set_n(u, us, t)
                else:
                    emap[(x, y)] = (t, s)
        if emap:
            raise AssertionError("unpaired edges while linking initial triangles")

    def init_triangle(self, i0, i1, i2, ccw):
        a, b, c = (i0, i1, i2) if ccw else (i1, i0, i2)
        t = self._alloc(a, b, c)
        g0 = self._alloc(b, a, GHOST)
        g1 = self._alloc(c, b, GHOST)
        g2 = self._alloc(a, c, GHOST)
        self._link_group((t, g0, g1, g2))
        self.last = t

    # -- predicates ---------------------------------------------------------
    def _conflict(self, t, iq, qx, qy):
        px = self.px
        py = self.py
        a = self.v0[t]
        b = self.v1[t]
        c = self.v2[t]
        if c == GHOST:
            ax = px[a]
            ay = py[a]
            bx = px[b]
            by = py[b]
            o = orient2d(ax, ay, bx, by, qx, qy)
            if o > 0:
                return True
            if o < 0:
                return False
            if ax != bx:
                return (ax < qx < bx) or (bx < qx < ax)
            return (ay < qy < by) or (by < qy < ay)
        return (
            incircle_sos(
                px[a], py[a], px[b], py[b], px[c], py[c], qx, qy, a, b, c, iq
            )
            > 0
        )

    def _locate(self, qx, qy):
        px = self.px
        py = self.py
        t = self.last
        if self.v2[t] == GHOST:
            t = self.n2[t]
        for _ in range(4 * len(self.v0) + 16):
            c = self.v2[t]
            if c == GHOST:
                return t
            a = self.v0[t]
            b = self.v1[t]
            ax = px[a]
            ay = py[a]
            bx = px[b]
            by = py[b]
            cx = px[c]
            cy = py[c]
            if orient2d(ax, ay, bx, by, qx, qy) < 0:
                t = self.n2[t]
            elif orient2d(bx, by, cx, cy, qx, qy) < 0:
                t = self.n0[t]
            elif orient2d(cx, cy, ax, ay, qx, qy) < 0:
                t = self.n1[t]
            else:
                return t
        raise NumericalError("point location walk failed to terminate")

    # -- insertion ----------------------------------------------------------
    def insert(self, iq):
        px = self.px
        py = self.py
        qx = px[iq]
        qy = py[iq]
        seed = self._locate(qx, qy)
        v0 = self.v0
        v1 = self.v1
        v2 = self.v2
        n0 = self.n0
        n1 = self.n1
        n2 = self.n2
        for v in (v0[seed], v1[seed], v2[seed]):
            if v != GHOST and px[v] == qx and py[v] == qy:
                raise DegenerateInputError(f"duplicate point at index {iq}")
        if not self._conflict(seed, iq, qx, qy):
            raise NumericalError(f"located triangle not in conflict for point {iq}")

        # collect the conflict cavity and its directed boundary edges
        state = {seed: True}
        stack = [seed]
        cavity = []
        boundary = []
        while stack:
            t = stack.pop()
            cavity.append(t)
            ta = v0[t]
            tb = v1[t]
            tc = v2[t]
            for nb, e0, e1 in ((n0[t], tb, tc), (n1[t], tc, ta), (n2[t], ta, tb)):
                st = state.get(nb)
                if st is None:
                    st = self._conflict(nb, iq, qx, qy)
                    state[nb] = st
                    if st:
                        stack.append(nb)
                if not st:
                    boundary.append((e0, e1, nb))

        # fan new triangles over the boundary
        emap = {}
        newtris = []
        for e0, e1, nb in boundary:
            if e0 == GHOST:
                t = self._alloc(e1, iq, GHOST)
            elif e1 == GHOST:
                t = self._alloc(iq, e0, GHOST)
            else:
                t = self._alloc(e0, e1, iq)
            newtris.append(t)
            # outside link across (e0, e1); nb's facing slot holds the vertex
            # not on that edge
            if v0[nb] != e0 and v0[nb] != e1:
                snb = 0
            elif v1[nb] != e0 and v1[nb] != e1:
                snb = 1
            else:
                snb = 2
            self._set_n(nb, snb, t)
            vs = (v0[t], v1[t], v2[t])
            s_out = vs.index(iq)  # edge opposite iq is (e0, e1)
            self._set_n(t, s_out, nb)
            for s in range(3):
                if s == s_out:
                    continue
                x = vs[(s + 1) % 3]
                y = vs[(s + 2) % 3]
                other = emap.pop((y, x), None)
                if other is not None:
                    u, us = other
                    self._set_n(t, s, u)
                    self._set_n(u, us, t)
                else:
                    emap[(x, y)] = (t, s)
        if emap:
            raise NumericalError(f"cavity fan failed to close for point {iq}")

        alive = self.alive
        free = self.free
        for t in cavity:
            alive[t] = False
            free.append(t)
        self.last = newtris[-1]

    def live_real_triangles(self):
        out = []
        alive = self.alive
        v2 = self.v2
        for t in range(len(v2)):
            if alive[t] and v2[t] != GHOST:
                out.append((self.v0[t], self.v1[t], v2[t]))
        return out


def _insertion_order(pts: np.ndarray) -> np.ndarray:
    """Serpentine grid order (~2 points/cell) for walk locality."""
    n = len(pts)
    if n <= 8:
        return np.arange(n)
    g = max(1, math.isqrt(n // 2))
    x = pts[:, 0]
    y = pts[:, 1]
    xmin = x.min()
    ymin = y.min()
    xspan = max(x.max() - xmin, 1e-300)
    yspan = max(y.max() - ymin, 1e-300)
    col = np.minimum((x - xmin) / xspan * g, g - 1).astype(np.int64)
    row = np.minimum((y - ymin) / yspan * g, g - 1).astype(np.int64)
    serp_col = np.where(row % 2 == 0, col, g - 1 - col)
    return np.lexsort((x, serp_col, row))


# ---------------------------------------------------------------------------
# finished triangulation


@dataclass(frozen=True)
class Triangulation:
    """Canonical Delaunay triangulation of a PointConfiguration.

    triangles are index triples sorted within each triple and listed in
    lexicographic order; circumcenters/radii are per-triangle.
    """

    vertices: PointConfiguration
    triangles: np.ndarray
    circumcenters: np.ndarray
    circumradii: np.ndarray
    edges: np.ndarray
    hull_edges: np.ndarray
    build_info: dict

    @property
    def hull_vertices(self) -> np.ndarray:
        return np.unique(self.hull_edges)

    @property
    def adjacency(self) -> np.ndarray:
        """neighbors[t, s] = triangle across the edge opposite vertex s (or -1)."""
        cache = self.build_info.get("_adjacency_cache")
        if cache is None:
            cache = _adjacency_from_triangles(self.triangles)
            self.build_info["_adjacency_cache"] = cache
        return cache

    def to_csv(self, path) -> None:
        write_csv(
            path,
            ("tri_index", "i", "j", "k", "cx", "cy", "r"),
            (
                (
                    t,
                    int(self.triangles[t, 0]),
                    int(self.triangles[t, 1]),
                    int(self.triangles[t, 2]),
                    float(self.circumcenters[t, 0]),
                    float(self.circumcenters[t, 1]),
                    float(self.circumradii[t]),
                )
                for t in range(len(self.triangles))
            ),
        )


def _circumdata(pts: np.ndarray, tris: np.ndarray):
    a = pts[tris[:, 0]]
    b = pts[tris[:, 1]]
    c = pts[tris[:, 2]]
    bx = b[:, 0] - a[:, 0]
    by = b[:, 1] - a[:, 1]
    cx = c[:, 0] - a[:, 0]
    cy = c[:, 1] - a[:, 1]
    d = 2.0 * (bx * cy - by * cx)
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    centers = np.column_stack([a[:, 0] + ux, a[:, 1] + uy])
    radii = np.hypot(ux, uy)
    return centers, radii


def _adjacency_from_triangles(tris: np.ndarray) -> np.ndarray:
    owners = {}
    nb = np.full(tris.shape, -1, dtype=np.int64)
    tl = tris.tolist()
    for t, (i, j, k) in enumerate(tl):
        for s, e in ((0, (j, k)), (1, (i, k)), (2, (i, j))):
            o = owners.pop(e, None)
            if o is None:
                owners[e] = (t, s)
            else:
                u, us = o
                nb[t, s] = u
                nb[u, us] = t
    return nb


def triangulate(config: PointConfiguration) -> Triangulation:
    pts = config.points
    n = len(pts)
    if n < 3:
        raise DegenerateInputError(f"need at least 3 points, got {n}")
    px = pts[:, 0].tolist()
    py = pts[:, 1].tolist()
    k = -1
    ccw = 0
    for j in range(2, n):
        o = orient2d(px[0], py[0], px[1], py[1], px[j], py[j])
        if o:
            k = j
            ccw = o
            break
    if k < 0:
        raise DegenerateInputError("all points are collinear")
    builder = _Builder(px, py)
    builder.init_triangle(0, 1, k, ccw > 0)
    for iq in _insertion_order(pts):
        if iq == 0 or iq == 1 or iq == k:
            continue
        builder.insert(int(iq))

    raw = builder.live_real_triangles()
    tris = np.sort(np.asarray(raw, dtype=np.int64).reshape(-1, 3), axis=1)
    order = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))
    tris = np.ascontiguousarray(tris[order])

    centers, radii = _circumdata(pts, tris)
    pairs = np.concatenate([tris[:, (0, 1)], tris[:, (0, 2)], tris[:, (1, 2)]])
    edges, counts = np.unique(pairs, axis=0, return_counts=True)
    hull_edges = edges[counts == 1]
    info = {"n_points": n, "seed_triple": (0, 1, k), "order": "serpentine-grid"}
    return Triangulation(config, tris, centers, radii, edges, hull_edges, info)


# ---------------------------------------------------------------------------
# anchored extraction


@dataclass(frozen=True)
class AnchoredEdge:
    """Delaunay edge with lex-min endpoint i in the anchor region."""

    i: int
    j: int
    length: float


@dataclass(frozen=True)
class AnchoredTriple:
    """Delaunay triangle, vertices i,j,k in lexicographic coordinate order."""

    i: int
    j: int
    k: int
    d12: float
    d13: float
    d23: float


class EdgeSet(Sequence):
    """Array-backed sequence of AnchoredEdge (fast bulk access via arrays())."""

    def __init__(self, i, j, length):
        self.i = np.asarray(i, dtype=np.int64)
        self.j = np.asarray(j, dtype=np.int64)
        self.length = np.asarray(length, dtype=float)

    def __len__(self):
        return len(self.i)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return EdgeSet(self.i[k], self.j[k], self.length[k])
        return AnchoredEdge(int(self.i[k]), int(self.j[k]), float(self.length[k]))

    def arrays(self):
        return self.i, self.j, self.length


class TripleSet(Sequence):
    """Array-backed sequence of AnchoredTriple."""

    def __init__(self, ijk, d12, d13, d23):
        self.ijk = np.asarray(ijk, dtype=np.int64).reshape(-1, 3)
        self.d12 = np.asarray(d12, dtype=float)
        self.d13 = np.asarray(d13, dtype=float)
        self.d23 = np.asarray(d23, dtype=float)

    def __len__(self):
        return len(self.ijk)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return TripleSet(self.ijk[k], self.d12[k], self.d13[k], self.d23[k])
        return AnchoredTriple(
            int(self.ijk[k, 0]),
            int(self.ijk[k, 1]),
            int(self.ijk[k, 2]),
            float(self.d12[k]),
            float(self.d13[k]),
            float(self.d23[k]),
        )

    def arrays(self):
        return self.ijk, self.d12, self.d13, self.d23


def edge_arrays(edges) -> tuple:
    """(i, j, length) arrays from an EdgeSet or any AnchoredEdge sequence."""
    if isinstance(edges, EdgeSet):
        return edges.arrays()
    i = np.fromiter((e.i for e in edges), dtype=np.int64, count=len(edges))
    j = np.fromiter((e.j for e in edges), dtype=np.int64, count=len(edges))
    d = np.fromiter((e.length for e in edges), dtype=float, count=len(edges))
    return i, j, d


def triple_arrays(triples) -> tuple:
    """(ijk, d12, d13, d23) arrays from a TripleSet or AnchoredTriple sequence."""
    if isinstance(triples, TripleSet):
        return triples.arrays()
    ijk = np.array([[t.i, t.j, t.k] for t in triples], dtype=np.int64).reshape(-1, 3)
    d12 = np.fromiter((t.d12 for t in triples), dtype=float, count=len(triples))
    d13 = np.fromiter((t.d13 for t in triples), dtype=float, count=len(triples))
    d23 = np.fromiter((t.d23 for t in triples), dtype=float, count=len(triples))
    return ijk, d12, d13, d23


def anchored_edges(tri: Triangulation, anchor: Window) -> EdgeSet:
    """Edges whose lexicographically smaller endpoint lies in the anchor."""
    pts = tri.vertices.points
    e = tri.edges
    if len(e) == 0:
        return EdgeSet([], [], [])
    pa = pts[e[:, 0]]
    pb = pts[e[:, 1]]
    a_first = lex_less_rows(pa, pb)
    first = np.where(a_first, e[:, 0], e[:, 1])
    second = np.where(a_first, e[:, 1], e[:, 0])
    mask = anchor.contains_analysis(pts[first])
    lengths = np.hypot(pa[:, 0] - pb[:, 0], pa[:, 1] - pb[:, 1])
    return EdgeSet(first[mask], second[mask], lengths[mask])


def _lex_rank3(p0, p1, p2):
    """Per-row lexicographic ranks of three point arrays (strict total order)."""
    lt01 = lex_less_rows(p0, p1)
    lt02 = lex_less_rows(p0, p2)
    lt12 = lex_less_rows(p1, p2)
    r0 = (~lt01).astype(np.int64) + (~lt02).astype(np.int64)
    r1 = lt01.astype(np.int64) + (~lt12).astype(np.int64)
    r2 = lt02.astype(np.int64) + lt12.astype(np.int64)
    return r0, r1, r2


def anchored_triples(tri: Triangulation, anchor: Window) -> TripleSet:
    """Triangles whose lex-min vertex lies in the anchor, vertices lex-sorted."""
    pts = tri.vertices.points
    t = tri.triangles
    if len(t) == 0:
        return TripleSet(np.empty((0, 3)), [], [], [])
    p = pts[t]  # (T, 3, 2)
    r0, r1, r2 = _lex_rank3(p[:, 0], p[:, 1], p[:, 2])
    ranks = np.stack([r0, r1, r2], axis=1)  # rank of each slot
    # position of the slot holding lex rank q
    perm = np.argsort(ranks, axis=1, kind="stable")
    sorted_idx = np.take_along_axis(t, perm, axis=1)
    sp = pts[sorted_idx]
    d12 = np.hypot(sp[:, 0, 0] - sp[:, 1, 0], sp[:, 0, 1] - sp[:, 1, 1])
    d13 = np.hypot(sp[:, 0, 0] - sp[:, 2, 0], sp[:, 0, 1] - sp[:, 2, 1])
    d23 = np.hypot(sp[:, 1, 0] - sp[:, 2, 0], sp[:, 1, 1] - sp[:, 2, 1])
    mask = anchor.contains_analysis(sp[:, 0])
    return TripleSet(sorted_idx[mask], d12[mask], d13[mask], d23[mask])


# ---------------------------------------------------------------------------
# boundary diagnostics


@dataclass(frozen=True)
class DiagnosticReport:
    """Result of the circumdisk-containment check near the anchor."""

    checked: int
    violations: int
    worst_overshoot: float
    examples: tuple

    @property
    def ok(self) -> bool:
        return self.violations == 0


def boundary_stability_check(tri: Triangulation, anchor: Window) -> DiagnosticReport:
    """Flag triangles touching the anchor whose circumdisk escapes the window.

    Zero violations certify that anchored edges/triples agree with those of
    the triangulation of the full (infinite-plane) process, by Delaunay
    locality: every triangle incident to an anchor vertex is witnessed by an
    empty disk contained in the simulated region.
    """
    pts = tri.vertices.points
    sim = tri.vertices.window
    in_anchor = anchor.contains_analysis(pts)
    touching = in_anchor[tri.triangles].any(axis=1)
    idx = np.nonzero(touching)[0]
    if len(idx) == 0:
        return DiagnosticReport(0, 0, 0.0, ())
    c = tri.circumcenters[idx]
    r = tri.circumradii[idx]
    xlo, xhi, ylo, yhi = sim.simulation_bounds
    overshoot = np.maximum.reduce(
        [
            (xlo - (c[:, 0] - r)),
            ((c[:, 0] + r) - xhi),
            (ylo - (c[:, 1] - r)),
            ((c[:, 1] + r) - yhi),
        ]
    )
    bad = overshoot > 0
    nbad = int(bad.sum())
    worst = float(overshoot[bad].max()) if nbad else 0.0
    examples = tuple(
        (int(idx[i]), float(overshoot[i])) for i in np.nonzero(bad)[0][:20]
    )
    return DiagnosticReport(int(len(idx)), nbad, worst, examples)


def default_margin(expected_count: float) -> float:
    """Margin policy: max(10, 4 sqrt(log E[n])) in unit-intensity scale."""
    return max(10.0, 4.0 * math.sqrt(math.log(max(float(expected_count), 2.0))))
