"""Isotropic fractional Brownian field on the plane.

Covariance (anchored at the origin, so W(0) = 0):

    cov(W(x), W(y)) = (scale_sq / 2) (|x|^(2H) + |y|^(2H) - |y - x|^(2H)).

Sampling at arbitrary sites goes through an exact dense Cholesky factorization
of this covariance (with a small jitter ladder and a pivoted fallback for the
semidefinite edge cases, e.g. a site at the origin).  Increment correlations
are available in closed form, exactly and in their large-separation form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky, get_lapack_funcs
from scipy.spatial.distance import cdist
from threadpoolctl import threadpool_limits

from .errors import NumericalError, ParameterError, ResourceLimitError
from .ioutil import write_csv
from .pointprocess import PointConfiguration

__all__ = [
    "FieldParams",
    "FieldSample",
    "powa",
    "cov",
    "cov_matrix",
    "sample_field",
    "sample_field_many",
    "normalized_increment",
    "increment_corr_exact",
    "pair_corr_R",
    "increment_corr_asymptotic",
    "increment_corr_blocks",
    "DEFAULT_POINT_CAP",
]

DEFAULT_POINT_CAP = 4000
_TINY = 1e-300
_JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass(frozen=True)
class FieldParams:
    """Hurst exponent and variance scale; alpha = 2H is the increment exponent."""

    hurst: float
    scale_sq: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise ParameterError(f"hurst must lie in (0,1), got {self.hurst}")
        if not (self.scale_sq > 0):
            raise ParameterError(f"scale_sq must be > 0, got {self.scale_sq}")

    @property
    def alpha(self) -> float:
        return 2.0 * self.hurst


@dataclass(frozen=True)
class FieldSample:
    """Field values aligned to a PointConfiguration."""

    config: PointConfiguration
    values: np.ndarray
    params: FieldParams
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if len(vals) != len(self.config):
            raise ParameterError("values length must match point count")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def to_csv(self, path) -> None:
        pts = self.config.points
        write_csv(
            path,
            ("index", "x", "y", "w"),
            (
                (int(self.config.index[i]), float(pts[i, 0]), float(pts[i, 1]), float(self.values[i]))
                for i in range(len(self.values))
            ),
        )


# ---------------------------------------------------------------------------
# powers and covariance


def powa(d, alpha: float):
    """d**alpha via exp(alpha log d), zero below the 1e-300 guard.

    Accepts scalars or arrays; avoids pow() domain surprises for small alpha.
    """
    if np.isscalar(d):
        d = float(d)
        if d < _TINY:
            return 0.0
        return math.exp(alpha * math.log(d))
    d = np.asarray(d, dtype=float)
    out = np.zeros_like(d)
    mask = d >= _TINY
    out[mask] = np.exp(alpha * np.log(d[mask]))
    return out


def cov(x, y, params: FieldParams) -> float:
    """Closed-form covariance of W(x) and W(y)."""
    a = params.alpha
    nx = math.hypot(float(x[0]), float(x[1]))
    ny = math.hypot(float(y[0]), float(y[1]))
    nd = math.hypot(float(y[0]) - float(x[0]), float(y[1]) - float(x[1]))
    return 0.5 * params.scale_sq * (powa(nx, a) + powa(ny, a) - powa(nd, a))


def cov_matrix(points: np.ndarray, params: FieldParams) -> np.ndarray:
    """Dense covariance matrix of the field at the given sites."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
    a = params.alpha
    K = cdist(pts, pts, "sqeuclidean")
    # d^alpha = exp((alpha/2) log d^2); zero distances map to exp(-inf) = 0
    with np.errstate(divide="ignore"):
        np.log(K, out=K)
    K *= 0.5 * a
    np.exp(K, out=K)
    ra = powa(np.hypot(pts[:, 0], pts[:, 1]), a)
    K *= -1.0
    K += ra[:, None]
    K += ra[None, :]
    K *= 0.5 * params.scale_sq
    return K


# ---------------------------------------------------------------------------
# sampling


def _factorize(K: np.ndarray) -> tuple:
    """Lower-triangular factor of K, with jitter ladder then pivoted fallback.

    Returns (L, perm, prov): sample = L @ z if perm is None else scatter of
    (L @ z) through perm.  prov records jitter level / method / rank.
    """
    n = K.shape[0]
    mdiag = float(np.mean(np.diag(K)))
    if mdiag <= 0:
        mdiag = 1.0
    for jit in _JITTER_LADDER:
        A = K.copy()
        if jit:
            A[np.diag_indices_from(A)] += jit * mdiag
        try:
            L = cholesky(A, lower=True, overwrite_a=True, check_finite=False)
            return L, None, {"method": "cholesky", "jitter": jit, "rank": n}
        except LinAlgError:
            continue
    (pstrf,) = get_lapack_funcs(("pstrf",), (K,))
    A, piv, rank, info = pstrf(K, lower=1)
    if info < 0:
        raise NumericalError(
            "pivoted Cholesky failed",
            {"info": int(info), "jitters_tried": list(_JITTER_LADDER)},
        )
    L = np.tril(A)[:, : max(int(rank), 1)]
    perm = np.asarray(piv, dtype=np.int64) - 1  # LAPACK is 1-based
    diag = np.abs(np.diag(L))
    cond_est = float((diag.max() / max(diag[diag > 0].min(), _TINY)) ** 2)
    return L, perm, {
        "method": "pivoted",
        "jitter": None,
        "rank": int(rank),
        "cond_estimate": cond_est,
    }


def _draw(L, perm, z):
    # L has n rows (rank columns when pivoted); pstrf computes P^T K P = L L^T,
    # so entry i of L @ z belongs at original index perm[i]
    vals = L @ z
    if perm is None:
        return vals
    out = np.empty_like(vals)
    out[perm] = vals
    return out


def sample_field(
    config: PointConfiguration,
    params: FieldParams,
    rng: np.random.Generator,
    cap: int = DEFAULT_POINT_CAP,
) -> FieldSample:
    """One exact joint draw of the field at the configuration's points."""
    mat = sample_field_many(config, params, rng, 1, cap=cap)
    return FieldSample(config, mat.values[:, 0], params, mat.provenance)


@dataclass(frozen=True)
class FieldSampleMatrix:
    """Several independent joint draws sharing one factorization (n x draws)."""

    config: PointConfiguration
    values: np.ndarray
    params: FieldParams
    provenance: dict

    def column(self, k: int) -> FieldSample:
        return FieldSample(self.config, self.values[:, k], self.params, self.provenance)


def sample_field_many(
    config: PointConfiguration,
    params: FieldParams,
    rng: np.random.Generator,
    draws: int,
    cap: int = DEFAULT_POINT_CAP,
) -> FieldSampleMatrix:
    n = len(config)
    if n == 0:
        raise ParameterError("empty configuration")
    if n > cap:
        raise ResourceLimitError(f"{n} points exceed the field cap {cap}")
    if draws < 1:
        raise ParameterError("draws must be >= 1")
    with threadpool_limits(limits=1):
        K = cov_matrix(config.points, params)
        L, perm, prov = _factorize(K)
        z = rng.standard_normal((L.shape[1], draws))
        vals = _draw(L, perm, z)
    return FieldSampleMatrix(config, vals, params, dict(prov))


# ---------------------------------------------------------------------------
# increments and correlations


def normalized_increment(sample: FieldSample, i: int, j: int) -> float:
    """(W(x_j) - W(x_i)) / (sigma d^H): a standard normal by construction."""
    if i == j:
        raise ParameterError("increment endpoints must differ")
    pts = sample.config.points
    d = math.hypot(pts[j, 0] - pts[i, 0], pts[j, 1] - pts[i, 1])
    if d <= 0.0:
        raise ParameterError("coincident increment endpoints")
    scale = math.sqrt(sample.params.scale_sq) * powa(d, sample.params.hurst)
    return float(sample.values[j] - sample.values[i]) / scale


def _dist(a, b) -> float:
    return math.hypot(float(b[0]) - float(a[0]), float(b[1]) - float(a[1]))


def increment_corr_exact(x1, x2, x3, x4, alpha: float) -> float:
    """corr(U_{x1,x2}, U_{x3,x4}) in closed form."""
    d12 = _dist(x1, x2)
    d34 = _dist(x3, x4)
    if d12 <= 0.0 or d34 <= 0.0:
        raise ParameterError("increment endpoints must be distinct")
    num = (powa(_dist(x1, x4), alpha) - powa(_dist(x1, x3), alpha)) - (
        powa(_dist(x2, x4), alpha) - powa(_dist(x2, x3), alpha)
    )
    return num / (2.0 * powa(d12 * d34, 0.5 * alpha))


def pair_corr_R(x1, x2, x3, alpha: float) -> float:
    """R = corr of the two increments out of x1 within a triangle."""
    d12 = _dist(x1, x2)
    d13 = _dist(x1, x3)
    d23 = _dist(x2, x3)
    if d12 <= 0.0 or d13 <= 0.0 or d23 <= 0.0:
        raise ParameterError("triple points must be pairwise distinct")
    return (powa(d12, alpha) + powa(d13, alpha) - powa(d23, alpha)) / (
        2.0 * powa(d12 * d13, 0.5 * alpha)
    )


def increment_corr_asymptotic(
    l1: float, l2: float, d: float, theta: float, beta: float, alpha: float
) -> float:
    """Leading large-d form of the increment correlation.

    Layout: one increment of length l1 at angle theta based at distance d
    from the other increment's base point; the other has length l2 at angle
    beta (angles against the axis orthogonal to the separation).  Decay is
    d^(alpha-2) with the angular factor
    cos(beta)cos(theta) - (1-alpha) sin(beta)sin(theta); the leading constant
    is alpha/2, from the second-order Taylor expansion of |.|^alpha (the
    covariance numerator is the mixed difference of that map, whose cross
    derivative carries one factor alpha).
    """
    if not (l1 > 0 and l2 > 0 and d > 0):
        raise ParameterError("l1, l2, d must be positive")
    ang = math.cos(beta) * math.cos(theta) - (1.0 - alpha) * math.sin(beta) * math.sin(theta)
    return 0.5 * alpha * powa(l1 * l2, 1.0 - 0.5 * alpha) * powa(d, alpha - 2.0) * ang


def increment_corr_blocks(a1, a2, b1, b2, alpha: float) -> np.ndarray:
    """Matrix of corr(U_{a1[r],a2[r]}, U_{b1[c],b2[c]}) over two edge blocks.

    a1,a2: (m,2) endpoint arrays; b1,b2: (k,2); returns (m,k).
    """
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)

    def pd(u, v):
        dx = u[:, None, 0] - v[None, :, 0]
        dy = u[:, None, 1] - v[None, :, 1]
        return powa(np.hypot(dx, dy), alpha)

    num = (pd(a1, b2) - pd(a1, b1)) - (pd(a2, b2) - pd(a2, b1))
    da = np.hypot(a2[:, 0] - a1[:, 0], a2[:, 1] - a1[:, 1])
    db = np.hypot(b2[:, 0] - b1[:, 0], b2[:, 1] - b1[:, 1])
    denom = 2.0 * powa(da[:, None] * db[None, :], 0.5 * alpha)
    return num / denom
