"""Adaptive-precision orientation and incircle predicates.

Fast float evaluation with a forward-error filter; when the filter cannot
certify the sign, the determinant is recomputed exactly over the rationals.
The error-bound coefficients (3+16eps)eps and (10+96eps)eps are the standard
"A" filter constants for these determinants.  Coordinates are assumed to be
ordinary doubles of moderate magnitude (no overflow/underflow in products),
which holds for every window this library produces.

`incircle_sos` additionally breaks exact cocircular ties by symbolic
perturbation: point i is lifted to |p_i|^2 + eps^(i+1), so lower-indexed
points receive the (infinitesimally) larger lift.  This makes the Delaunay
triangulation of any point set unique and independent of insertion order; on
the 4 corners of a square it keeps triangles {0,1,2} and {1,2,3}.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["orient2d", "incircle", "incircle_sos"]

_EPS = 2.0 ** -53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def _sign(x: float) -> int:
    if x > 0.0:
        return 1
    if x < 0.0:
        return -1
    return 0


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    acx = Fraction(ax) - Fraction(cx)
    acy = Fraction(ay) - Fraction(cy)
    bcx = Fraction(bx) - Fraction(cx)
    bcy = Fraction(by) - Fraction(cy)
    det = acx * bcy - acy * bcx
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def orient2d(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the (a,b,c) orientation: +1 counterclockwise, -1 clockwise, 0 collinear."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    # The signs of the two products are exact, so opposite (or zero) signs
    # decide the predicate without any error analysis.
    if detleft > 0.0:
        if detright <= 0.0:
            return 1
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return -1
        detsum = -detleft - detright
    else:
        return _sign(-detright)
    errbound = _CCW_BOUND * detsum
    if det >= errbound:
        return 1
    if -det >= errbound:
        return -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    fdx, fdy = Fraction(dx), Fraction(dy)
    adx = Fraction(ax) - fdx
    ady = Fraction(ay) - fdy
    bdx = Fraction(bx) - fdx
    bdy = Fraction(by) - fdy
    cdx = Fraction(cx) - fdx
    cdy = Fraction(cy) - fdy
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - bdy * cdx)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - cdy * adx)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - ady * bdx)
    )
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def incircle(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """Sign of the incircle determinant.

    For a counterclockwise triangle (a,b,c): +1 iff d lies strictly inside
    the circumcircle, -1 strictly outside, 0 exactly on it.
    """
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    errbound = _ICC_BOUND * permanent
    if det > errbound:
        return 1
    if -det > errbound:
        return -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def incircle_sos(ax, ay, bx, by, cx, cy, dx, dy, ia, ib, ic, idx) -> int:
    """incircle with symbolic-perturbation tie break; never returns 0.

    Expanding the lifted 4x4 determinant along the lift column gives
    det(eps) = det0 + sum_r (-1)^r eps^(index_r + 1) * orient(other three rows),
    rows r = 0..3 holding (a,b,c,d).  When det0 = 0 the sign is decided by the
    nonzero term whose vertex index is smallest (largest perturbation).
    """
    s = incircle(ax, ay, bx, by, cx, cy, dx, dy)
    if s:
        return s
    rows = (
        (ia, 1, (bx, by, cx, cy, dx, dy)),
        (ib, -1, (ax, ay, cx, cy, dx, dy)),
        (ic, 1, (ax, ay, bx, by, dx, dy)),
        (idx, -1, (ax, ay, bx, by, cx, cy)),
    )
    for _, par, coords in sorted(rows, key=lambda r: r[0]):
        o = orient2d(*coords)
        if o:
            return par * o
    raise AssertionError("all four perturbation minors vanished (degenerate call)")
