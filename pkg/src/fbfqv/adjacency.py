"""Exact Delaunay-adjacency certificates for point pairs against obstacles.

Two sites p, q are Delaunay neighbors iff some disk with p and q on its
boundary has no site strictly inside.  Centers of such disks live on the
perpendicular bisector, c(t) = m + t u with m the midpoint and u a unit
normal of q - p; the disk at t has radius sqrt(r0^2 + t^2), r0 = |q - p|/2.
An obstacle s lies strictly inside the disk at t iff a_s t > b_s with

    a_s = u . (s - m),      b_s = (|s - m|^2 - r0^2) / 2,

so the admissible t form an interval [L, U] with U = min over a_s > 0 of
b_s / a_s and L the max over a_s < 0 (an obstacle with a_s = 0 and b_s < 0
kills every t).  Certification is one-sided-safe under windowed sampling:
admissible t are intersected with the cap |t| <= t_cap for which the disk
stays inside the sampled box, so "adjacent" never relies on unsampled space,
and "not adjacent" follows from sampled obstacles alone.  Draws whose only
admissible disks leave the box are reported as undetermined rather than
guessed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "ADJACENT",
    "NOT_ADJACENT",
    "UNDETERMINED",
    "PairSpec",
    "JointAdjacencyResult",
    "box_from_points",
    "boxes_overlap",
    "pair_status_batch",
    "joint_adjacency_mc",
]

ADJACENT = 1
NOT_ADJACENT = 0
UNDETERMINED = -1


@dataclass(frozen=True)
class PairSpec:
    """A pair to certify plus the fixed points that can obstruct it."""

    a: np.ndarray
    b: np.ndarray
    fixed_obstacles: np.ndarray  # (k, 2), possibly empty


@dataclass(frozen=True)
class JointAdjacencyResult:
    successes: int
    draws: int
    undetermined: int
    boxes: tuple
    split: bool

    @property
    def value(self) -> float:
        return self.successes / self.draws

    @property
    def std_error(self) -> float:
        p = self.value
        return float(np.sqrt(p * (1.0 - p) / self.draws))


def box_from_points(pts: np.ndarray, margin: float):
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return pts.min(axis=0) - margin, pts.max(axis=0) + margin


def boxes_overlap(lo1, hi1, lo2, hi2) -> bool:
    return bool(np.all(lo1 <= hi2) and np.all(lo2 <= hi1))


def pair_status_batch(p, q, pts, valid, lo, hi) -> np.ndarray:
    """Status per batch row for the pair (p, q) against masked obstacles.

    pts: (B, n, 2) obstacle coordinates, valid: (B, n) mask.  Returns a
    (B,) int array with values ADJACENT / NOT_ADJACENT / UNDETERMINED.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    delta = q - p
    d = float(np.hypot(delta[0], delta[1]))
    if d == 0.0:
        raise ParameterError("pair endpoints coincide")
    m = 0.5 * (p + q)
    u = np.array([-delta[1], delta[0]]) / d
    r0 = 0.5 * d

    rel = pts - m
    a = rel[..., 0] * u[0] + rel[..., 1] * u[1]
    b = 0.5 * (rel[..., 0] ** 2 + rel[..., 1] ** 2 - r0 * r0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = b / a
    pos = valid & (a > 0.0)
    neg = valid & (a < 0.0)
    upper = np.where(pos, ratio, np.inf).min(axis=-1, initial=np.inf)
    lower = np.where(neg, ratio, -np.inf).max(axis=-1, initial=-np.inf)
    killed = (valid & (a == 0.0) & (b < 0.0)).any(axis=-1)

    # cap: disk at t stays in the box iff |t| <= (D^2 - r0^2)/(2D), D = wall distance
    dist_wall = min(m[0] - lo[0], hi[0] - m[0], m[1] - lo[1], hi[1] - m[1])
    if dist_wall > r0:
        t_cap = (dist_wall * dist_wall - r0 * r0) / (2.0 * dist_wall)
    else:
        t_cap = -1.0  # empty cap interval: adjacency can never be certified

    feasible = ~killed & (lower <= upper)
    certified = feasible & (np.maximum(lower, -t_cap) <= np.minimum(upper, t_cap))
    status = np.full(pts.shape[0], NOT_ADJACENT, dtype=np.int8)
    status[certified] = ADJACENT
    status[feasible & ~certified] = UNDETERMINED
    return status


def _group_pairs(pairs, margin):
    """Partition pairs into groups whose dilated bounding boxes overlap."""
    boxes = [box_from_points(np.stack([ps.a, ps.b]), margin) for ps in pairs]
    n = len(pairs)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if boxes_overlap(boxes[i][0], boxes[i][1], boxes[j][0], boxes[j][1]):
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _simulate_group(pair_ids, pairs, intensity, inner, rng, margin, chunk_target):
    """Statuses (inner, len(pair_ids)) for one group sharing a Poisson patch."""
    members = [pairs[k] for k in pair_ids]
    anchor_pts = np.concatenate([np.stack([ps.a, ps.b]) for ps in members])
    lo, hi = box_from_points(anchor_pts, margin)
    area = float(np.prod(hi - lo))
    lam = intensity * area
    chunk = max(16, min(inner, int(chunk_target / max(lam, 1.0))))

    fixed = []
    for ps in members:
        f = np.asarray(ps.fixed_obstacles, dtype=float).reshape(-1, 2)
        if len(f):
            inside = np.all((f >= lo) & (f <= hi), axis=1)
            f = f[inside]  # points outside the box cannot lie in an in-box disk
        fixed.append(f)

    out = np.empty((inner, len(members)), dtype=np.int8)
    done = 0
    while done < inner:
        c = min(chunk, inner - done)
        counts = rng.poisson(lam, size=c)
        maxc = int(counts.max(initial=0))
        pts = lo + rng.random((c, maxc, 2)) * (hi - lo)
        valid = np.arange(maxc) < counts[:, None]
        for col, (ps, f) in enumerate(zip(members, fixed)):
            if len(f):
                allp = np.concatenate(
                    [pts, np.broadcast_to(f, (c, len(f), 2))], axis=1
                )
                allv = np.concatenate(
                    [valid, np.ones((c, len(f)), dtype=bool)], axis=1
                )
            else:
                allp, allv = pts, valid
            out[done : done + c, col] = pair_status_batch(ps.a, ps.b, allp, allv, lo, hi)
        done += c
    return out, (tuple(lo), tuple(hi))


def joint_adjacency_mc(
    pairs,
    intensity: float,
    inner: int,
    rng,
    margin: float = 8.0,
    chunk_target: float = 3e6,
) -> JointAdjacencyResult:
    """Monte Carlo frequency of {every pair Delaunay-adjacent} over Poisson draws.

    Pairs whose dilated boxes are disjoint are simulated on independent
    patches; the Poisson process restricted to disjoint regions is
    independent, so the joint law of the indicators is unchanged.  A draw in
    which no pair is refuted but some pair is undetermined counts as a
    failure and increments the undetermined tally.
    """
    if inner < 1:
        raise ParameterError("inner must be >= 1")
    if not pairs:
        raise ParameterError("need at least one pair")
    groups = _group_pairs(pairs, margin)
    statuses = np.empty((inner, len(pairs)), dtype=np.int8)
    boxes = []
    for g in groups:
        st, box = _simulate_group(g, pairs, intensity, inner, rng, margin, chunk_target)
        statuses[:, g] = st
        boxes.append(box)
    all_adj = (statuses == ADJACENT).all(axis=1)
    refuted = (statuses == NOT_ADJACENT).any(axis=1)
    undetermined = int((~all_adj & ~refuted).sum())
    return JointAdjacencyResult(
        successes=int(all_adj.sum()),
        draws=inner,
        undetermined=undetermined,
        boxes=tuple(boxes),
        split=len(groups) > 1,
    )
