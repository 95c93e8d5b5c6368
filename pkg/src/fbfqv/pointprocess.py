"""Homogeneous Poisson point processes on square windows.

A Window is a square analysis region (half-open, so abutting windows tile the
plane without double counting) surrounded by a margin; points are simulated on
the enlarged square.  Configurations carry stable integer indices, are
immutable, and know how to rescale themselves (the x -> c*x similarity that
trades intensity for window size).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, ParameterError, ResourceLimitError
from .ioutil import fmt, write_csv

__all__ = [
    "Window",
    "PointConfiguration",
    "sample_poisson",
    "rescale",
    "lex_less",
    "lex_less_rows",
    "lex_argsort",
]

DEFAULT_EXPECTED_CAP = 10**7


@dataclass(frozen=True)
class Window:
    """Square analysis region (center +- half_side] plus a simulation margin."""

    center: tuple
    half_side: float
    margin: float = 0.0

    def __post_init__(self):
        if not (self.half_side > 0):
            raise ParameterError(f"half_side must be > 0, got {self.half_side}")
        if self.margin < 0:
            raise ParameterError(f"margin must be >= 0, got {self.margin}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "half_side", float(self.half_side))
        object.__setattr__(self, "margin", float(self.margin))

    # -- geometry -----------------------------------------------------------
    @property
    def analysis_bounds(self):
        """(xlo, xhi, ylo, yhi) of the half-open analysis square."""
        cx, cy = self.center
        h = self.half_side
        return (cx - h, cx + h, cy - h, cy + h)

    @property
    def simulation_bounds(self):
        cx, cy = self.center
        e = self.half_side + self.margin
        return (cx - e, cx + e, cy - e, cy + e)

    @property
    def analysis_area(self) -> float:
        return (2.0 * self.half_side) ** 2

    @property
    def simulation_area(self) -> float:
        return (2.0 * (self.half_side + self.margin)) ** 2

    def contains_analysis(self, points: np.ndarray) -> np.ndarray:
        """Half-open membership mask: lo < coordinate <= hi on both axes."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xlo, xhi, ylo, yhi = self.analysis_bounds
        return (pts[:, 0] > xlo) & (pts[:, 0] <= xhi) & (pts[:, 1] > ylo) & (pts[:, 1] <= yhi)

    def contains_simulation(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xlo, xhi, ylo, yhi = self.simulation_bounds
        return (pts[:, 0] >= xlo) & (pts[:, 0] <= xhi) & (pts[:, 1] >= ylo) & (pts[:, 1] <= yhi)

    def scaled(self, factor: float) -> "Window":
        return Window(
            (self.center[0] * factor, self.center[1] * factor),
            self.half_side * factor,
            self.margin * factor,
        )

    def as_dict(self) -> dict:
        return {
            "center": [self.center[0], self.center[1]],
            "half_side": self.half_side,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class PointConfiguration:
    """Immutable planar point set with stable indices and its window."""

    points: np.ndarray
    window: Window
    index: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 2))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        idx = self.index
        if idx is None:
            idx = np.arange(len(pts), dtype=np.int64)
        else:
            idx = np.asarray(idx, dtype=np.int64)
            if idx.shape != (len(pts),):
                raise ParameterError("index must have one entry per point")
        idx.setflags(write=False)
        object.__setattr__(self, "index", idx)

    def __len__(self) -> int:
        return len(self.points)

    # -- serialization ------------------------------------------------------
    def to_csv(self, path) -> None:
        write_csv(
            path,
            ("index", "x", "y"),
            (
                (int(self.index[i]), float(self.points[i, 0]), float(self.points[i, 1]))
                for i in range(len(self))
            ),
        )

    def envelope(self, seed_info: dict | None = None) -> dict:
        """JSON envelope: window + seed metadata + row count."""
        env = {"window": self.window.as_dict(), "n_points": len(self)}
        if seed_info:
            env["seed"] = dict(seed_info)
        return env

    @classmethod
    def from_csv(cls, path, window: Window) -> "PointConfiguration":
        idx, xs, ys = [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "index,x,y":
                raise ParameterError(f"unexpected point CSV header: {header!r}")
            for line in fh:
                i, x, y = line.strip().split(",")
                idx.append(int(i))
                xs.append(float(x))
                ys.append(float(y))
        return cls(np.column_stack([xs, ys]) if xs else np.empty((0, 2)), window, np.array(idx))


# ---------------------------------------------------------------------------
# sampling


def _dedup_positions(pts: np.ndarray) -> np.ndarray:
    """Indices of rows that collide with an earlier identical row."""
    if len(pts) < 2:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    sorted_pts = pts[order]
    same = np.all(sorted_pts[1:] == sorted_pts[:-1], axis=1)
    return order[1:][same]


def sample_poisson(
    intensity: float,
    window: Window,
    rng: np.random.Generator,
    expected_cap: float = DEFAULT_EXPECTED_CAP,
) -> PointConfiguration:
    """Sample a homogeneous Poisson process on the window's simulation region.

    The count is Poisson(intensity * simulation area) and positions are i.i.d.
    uniform.  Coordinate collisions (probability zero in theory, conceivable
    with floats) are resampled once, then rejected.
    """
    if not (intensity > 0):
        raise ParameterError(f"intensity must be > 0, got {intensity}")
    mean = intensity * window.simulation_area
    if mean > expected_cap:
        raise ResourceLimitError(
            f"expected count {mean:.3g} exceeds cap {expected_cap:.3g}"
        )
    n = int(rng.poisson(mean))
    xlo, xhi, ylo, yhi = window.simulation_bounds
    pts = np.empty((n, 2), dtype=float)
    pts[:, 0] = rng.uniform(xlo, xhi, size=n)
    pts[:, 1] = rng.uniform(ylo, yhi, size=n)
    dup = _dedup_positions(pts)
    if len(dup):
        pts[dup, 0] = rng.uniform(xlo, xhi, size=len(dup))
        pts[dup, 1] = rng.uniform(ylo, yhi, size=len(dup))
        if len(_dedup_positions(pts)):
            raise DegenerateInputError("duplicate coordinates persisted after resampling")
    return PointConfiguration(pts, window)


def rescale(config: PointConfiguration, factor: float) -> PointConfiguration:
    """Similarity x -> factor*x applied to points and window; indices kept."""
    if not (factor > 0):
        raise ParameterError(f"factor must be > 0, got {factor}")
    return PointConfiguration(
        config.points * factor, config.window.scaled(factor), config.index
    )


# ---------------------------------------------------------------------------
# lexicographic order


def lex_less(a, b) -> bool:
    """Strict lexicographic order on planar points: x first, then y."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    return ax < bx or (ax == bx and ay < by)


def lex_less_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized lex_less over matching (n,2) arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a[..., 0] < b[..., 0]) | ((a[..., 0] == b[..., 0]) & (a[..., 1] < b[..., 1]))


def lex_argsort(points: np.ndarray) -> np.ndarray:
    """Indices sorting rows lexicographically (x primary, y secondary)."""
    pts = np.asarray(points, dtype=float)
    return np.lexsort((pts[:, 1], pts[:, 0]))
