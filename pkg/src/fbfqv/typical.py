"""Typical-cell objects of the unit-intensity Poisson-Delaunay mosaic.

The typical cell is R * triangle(U1, U2, U3) with R and the directions
independent: R^2 ~ Gamma(2, pi) (radius density 2 pi^2 r^3 e^(-pi r^2)) and
(U1, U2, U3) uniform on the circle reweighted by the inscribed-triangle
area, density a(triangle)/(12 pi^2).  The typical edge length is
D = R |U1 - U2|; a typical couple of edges sharing a vertex is the image
(R|U3-U2|, R|U2-U1|, arcsin(cos(theta_{U1,U2}/2))) of the same draw.

The edge-length CDF has prefactor pi/3 in its (r, u1, u2) integral form;
substituting s = pi r^2 integrates the radial factor in closed form,
gamma(s*) = 1 - (1 + s*) e^(-s*) with s* = pi l^2 / |u1 - u2|^2, leaving a
two-angle integral evaluated by a midpoint tensor rule and normalized by
the same rule's total mass (so the limit at l -> infinity is exactly 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delaunay import Triangulation, anchored_edges
from .errors import ParameterError
from .ioutil import write_csv
from .pointprocess import Window

__all__ = [
    "couples_from_cells",
    "A_MAX",
    "TypicalCellDraw",
    "TypicalCoupleDraw",
    "TypicalCellSample",
    "TypicalCoupleSample",
    "sample_typical_cell",
    "sample_typical_cells",
    "sample_typical_couple",
    "sample_typical_couples",
    "typical_edge_cdf",
    "estimate_intensities",
]

# Largest area of a triangle inscribed in the unit circle: the equilateral
# case with vertices at angles 0, 2pi/3, 4pi/3 has area 3*sqrt(3)/4.
A_MAX = 3.0 * math.sqrt(3.0) / 4.0

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class TypicalCellDraw:
    radius: float
    directions: np.ndarray  # (3, 2) unit vectors

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ParameterError("radius must be positive")
        norms = np.hypot(self.directions[:, 0], self.directions[:, 1])
        if np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
            raise ParameterError("directions must be unit vectors")

    @property
    def triangle(self) -> np.ndarray:
        return self.radius * self.directions


@dataclass(frozen=True)
class TypicalCoupleDraw:
    d1: float
    d2: float
    theta: float

    def __post_init__(self):
        if self.d1 < 0.0 or self.d2 < 0.0:
            raise ParameterError("edge lengths must be nonnegative")
        if not (-0.5 * math.pi <= self.theta < 0.5 * math.pi):
            raise ParameterError("theta outside [-pi/2, pi/2)")


@dataclass(frozen=True)
class TypicalCellSample:
    radii: np.ndarray  # (n,)
    directions: np.ndarray  # (n, 3, 2)

    def __len__(self):
        return len(self.radii)

    def to_csv(self, path) -> None:
        u = self.directions
        rows = (
            (k, self.radii[k], u[k, 0, 0], u[k, 0, 1], u[k, 1, 0], u[k, 1, 1], u[k, 2, 0], u[k, 2, 1])
            for k in range(len(self.radii))
        )
        write_csv(path, ["draw", "r", "u1x", "u1y", "u2x", "u2y", "u3x", "u3y"], rows)


@dataclass(frozen=True)
class TypicalCoupleSample:
    d1: np.ndarray
    d2: np.ndarray
    theta: np.ndarray

    def __len__(self):
        return len(self.d1)

    def to_csv(self, path) -> None:
        rows = ((k, self.d1[k], self.d2[k], self.theta[k]) for k in range(len(self.d1)))
        write_csv(path, ["draw", "d1", "d2", "theta"], rows)


def _triangle_areas(angles: np.ndarray) -> np.ndarray:
    """Areas of triangles inscribed in the unit circle, angles (m, 3)."""
    u = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    e1 = u[:, 1] - u[:, 0]
    e2 = u[:, 2] - u[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def sample_typical_cells(count: int, rng) -> TypicalCellSample:
    """Vectorized draws: Gamma radius plus area-rejection directions."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    radii = np.sqrt(rng.gamma(2.0, 1.0, size=count) / math.pi)
    dirs = np.empty((count, 3, 2))
    got = 0
    while got < count:
        m = max(64, int(1.2 * (count - got) / 0.36))
        angles = rng.random((m, 3)) * (2.0 * math.pi)
        accept = rng.random(m) * A_MAX < _triangle_areas(angles)
        hit = angles[accept]
        take = min(len(hit), count - got)
        a = hit[:take]
        dirs[got : got + take] = np.stack([np.cos(a), np.sin(a)], axis=-1)
        got += take
    return TypicalCellSample(radii, dirs)


def sample_typical_cell(rng) -> TypicalCellDraw:
    s = sample_typical_cells(1, rng)
    return TypicalCellDraw(float(s.radii[0]), s.directions[0])


def couples_from_cells(cells: TypicalCellSample) -> TypicalCoupleSample:
    u = cells.directions
    r = cells.radii
    d1 = r * np.hypot(u[:, 2, 0] - u[:, 1, 0], u[:, 2, 1] - u[:, 1, 1])
    d2 = r * np.hypot(u[:, 1, 0] - u[:, 0, 0], u[:, 1, 1] - u[:, 0, 1])
    phi1 = np.arctan2(u[:, 0, 1], u[:, 0, 0])
    phi2 = np.arctan2(u[:, 1, 1], u[:, 1, 0])
    theta12 = np.mod(phi2 - phi1, 2.0 * math.pi)
    theta = np.arcsin(np.cos(0.5 * theta12))
    return TypicalCoupleSample(d1, d2, theta)


def sample_typical_couples(count: int, rng) -> TypicalCoupleSample:
    return couples_from_cells(sample_typical_cells(count, rng))


def sample_typical_couple(rng) -> TypicalCoupleDraw:
    s = sample_typical_couples(1, rng)
    return TypicalCoupleDraw(float(s.d1[0]), float(s.d2[0]), float(s.theta[0]))


def typical_edge_cdf(l, quadrature_size: int = 512):
    """P[D <= l] for the typical edge length, scalar or array l.

    Midpoint tensor rule over the two direction angles; the radial integral
    is exact (see module docstring).  Mass-normalized on the same grid, so
    values are monotone in l and reach exactly 1 in the limit.
    """
    if quadrature_size < 8:
        raise ParameterError("quadrature_size must be >= 8")
    arr = np.asarray(l, dtype=float)
    if np.any(arr < 0.0):
        raise ParameterError("edge length must be nonnegative")
    q = quadrature_size
    h = 2.0 * math.pi / q
    phi = (np.arange(q) + 0.5) * h
    p1, p2 = np.meshgrid(phi, phi, indexing="ij")
    u1 = np.stack([np.cos(p1), np.sin(p1)], axis=-1)
    u2 = np.stack([np.cos(p2), np.sin(p2)], axis=-1)
    e1 = np.array([1.0, 0.0])
    a = 0.5 * np.abs(
        (u2[..., 0] - u1[..., 0]) * (e1[1] - u1[..., 1])
        - (u2[..., 1] - u1[..., 1]) * (e1[0] - u1[..., 0])
    )
    mass = float(np.sum(a))
    # On the uniform midpoint grid the chord |u1 - u2| depends only on the
    # angle difference, which takes exactly q values; collapsing the q^2
    # nodes into q difference classes leaves the sum unchanged and makes
    # evaluation at many lengths cheap.
    cls = (np.arange(q)[:, None] - np.arange(q)[None, :]) % q
    class_weight = np.bincount(cls.ravel(), weights=a.ravel(), minlength=q)
    du_sq = 2.0 - 2.0 * np.cos(np.arange(q) * h)
    # the zero-difference class pairs coincident directions, which carry zero
    # area weight; drop it so the closed-form radial factor never sees a
    # zero chord
    keep = du_sq > 0.0
    weights = class_weight[keep]
    inv = 1.0 / du_sq[keep]

    flat = np.atleast_1d(arr)
    out = np.empty(flat.shape)
    block = max(1, int(2e7 // max(1, len(inv))))
    for start in range(0, len(flat), block):
        s_star = math.pi * flat[start : start + block, None] ** 2 * inv[None, :]
        gamma = -np.expm1(-s_star) - s_star * np.exp(-s_star)
        out[start : start + block] = gamma @ weights / mass
    return float(out[0]) if arr.ndim == 0 else out


def estimate_intensities(tri: Triangulation, anchor: Window):
    """(beta1, beta2): anchored-edge and circumcenter-in-anchor counts per area."""
    area = anchor.analysis_area
    centers = tri.circumcenters
    inside = anchor.contains_analysis(centers)
    beta2 = float(inside.sum()) / area
    beta1 = len(anchored_edges(tri, anchor)) / area
    return beta1, beta2
