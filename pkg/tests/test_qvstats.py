"""Squared-increment statistics: V2, V3, conditional moments, contraction."""

import math

import numpy as np
import pytest

from fbfqv.delaunay import EdgeSet, TripleSet, anchored_edges, triangulate
from fbfqv.errors import DegenerateInputError, ParameterError, ResourceLimitError
from fbfqv.fbf import (
    FieldParams,
    FieldSample,
    increment_corr_exact,
    sample_field_many,
)
from fbfqv.pointprocess import PointConfiguration, Window, sample_poisson
from fbfqv.qvstats import (
    compute_v2,
    compute_v3,
    conditional_second_moment_v2,
    contraction_norm_v2,
    corr_matrix,
    tilde_increments,
)
from fbfqv.streams import substream

P = FieldParams(0.25, 1.0)  # alpha = 0.5


def _sample(pts, values, params=P):
    pts = np.asarray(pts, dtype=float)
    half = float(np.max(np.abs(pts))) + 1.0
    cfg = PointConfiguration(pts, Window((0.0, 0.0), half, 0.0))
    return FieldSample(cfg, np.asarray(values, dtype=float), params)


def test_v2_hand_example():
    # two unit edges, W = (0, 2, -1): U = 2/1^H and -1/1^H, so
    # V2 = (4 + 1 - 2) / sqrt(2)
    pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    s = _sample(pts, [0.0, 2.0, -1.0])
    edges = EdgeSet([0, 0], [1, 2], [1.0, 1.0])
    out = compute_v2(s, edges)
    assert out.kind == "V2" and out.n_terms == 2
    assert math.isclose(out.value, 3.0 / math.sqrt(2.0), rel_tol=1e-14)


def test_v2_scaling_normalization():
    # doubling an edge length rescales U by d^{-H}
    pts = [(0.0, 0.0), (4.0, 0.0)]
    s = _sample(pts, [0.0, 3.0])
    edges = EdgeSet([0], [1], [4.0])
    u = 3.0 / 4.0**0.25
    assert math.isclose(compute_v2(s, edges).value, u * u - 1.0, rel_tol=1e-14)


def test_v2_empty_edges_raises():
    s = _sample([(0.0, 0.0), (1.0, 0.0)], [0.0, 1.0])
    with pytest.raises(DegenerateInputError):
        compute_v2(s, EdgeSet([], [], []))


def test_tilde_orthogonalizes():
    rng = np.random.default_rng(11)
    r = 0.5
    z = rng.standard_normal((2, 200000))
    u13 = z[0]
    u12 = r * z[0] + math.sqrt(1 - r * r) * z[1]
    t = np.array([tilde_increments(a, b, r)[0] for a, b in zip(u12[:5000], u13[:5000])])
    assert abs(np.corrcoef(t, u13[:5000])[0, 1]) < 0.05
    assert abs(np.var(t) - 1.0) < 0.05


def test_tilde_rejects_collinear():
    with pytest.raises(DegenerateInputError):
        tilde_increments(1.0, 1.0, 1.0)
    with pytest.raises(DegenerateInputError):
        tilde_increments(1.0, 1.0, -1.0 + 1e-15)


def test_v3_equilateral_hand_example():
    # unit equilateral triple has R = 1/2 for every alpha
    h = math.sqrt(3.0) / 2.0
    pts = [(0.0, 0.0), (1.0, 0.0), (0.5, h)]
    w = [0.0, 1.2, -0.7]
    s = _sample(pts, w)
    triples = TripleSet([[0, 1, 2]], [1.0], [1.0], [1.0])
    diag = {}
    out = compute_v3(s, triples, 0.5, diag)
    u12, u13, r = 1.2, -0.7, 0.5
    tilde = (u12 - r * u13) / math.sqrt(1 - r * r)
    expect = (tilde * tilde - 1.0) + (u13 * u13 - 1.0)
    assert out.kind == "V3" and out.n_terms == 1
    assert math.isclose(out.value, expect, rel_tol=1e-12)
    assert diag["dropped_triples"] == 0


def test_v3_drops_degenerate_triples():
    # |R| -> 1 exactly when the two outer endpoints collapse together
    # (d23 -> 0 with d12 = d13); such triples must be dropped, not crash
    h = math.sqrt(3.0) / 2.0
    pts = [(0.0, 0.0), (1.0, 0.0), (0.5, h), (2.0, 0.0), (3.0, 0.0)]
    w = [0.0, 1.0, 0.5, -0.2, 0.3]
    s = _sample(pts, w)
    triples = TripleSet(
        [[0, 1, 2], [0, 3, 4]],
        [1.0, 1.0],
        [1.0, 1.0],
        [1.0, 1e-30],
    )
    diag = {}
    out = compute_v3(s, triples, 0.5, diag)
    assert out.n_terms == 1
    assert diag["dropped_triples"] == 1


def test_v3_all_degenerate_raises():
    pts = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
    s = _sample(pts, [0.0, 1.0, 2.0])
    triples = TripleSet([[0, 1, 2]], [1.0], [1.0], [0.0])
    with pytest.raises(DegenerateInputError):
        compute_v3(s, triples, 0.5)


def test_v3_cross_check_passes_on_random_fields():
    # the tilde-sum and quadratic-form routes must agree on generic data,
    # including badly conditioned (but kept) triples
    rng = np.random.default_rng(7)
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.5, 1e-5)])  # R very close to 1
    d12 = 1.0
    d13 = math.dist(pts[0], pts[2])
    d23 = math.dist(pts[1], pts[2])
    triples = TripleSet([[0, 1, 2]], [d12], [d13], [d23])
    for _ in range(50):
        s = _sample(pts, rng.standard_normal(3))
        compute_v3(s, triples, 0.5)  # must not raise NumericalError


def test_corr_matrix_matches_scalar_route():
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.3, 1.2), (2.0, 1.5)])
    edges = EdgeSet([0, 0, 1], [1, 2, 3], [
        1.0,
        math.dist(pts[0], pts[2]),
        math.dist(pts[1], pts[3]),
    ])
    cm = corr_matrix(pts, edges, 0.5)
    m = cm.entries
    assert np.allclose(m, m.T, atol=1e-15)
    assert np.all(np.diag(m) == 1.0)
    pairs = [(0, 1), (0, 2), (1, 3)]
    for a in range(3):
        for b in range(3):
            ia, ja = pairs[a]
            ib, jb = pairs[b]
            if a == b:
                continue
            want = increment_corr_exact(pts[ia], pts[ja], pts[ib], pts[jb], 0.5)
            assert math.isclose(m[a, b], want, rel_tol=1e-12, abs_tol=1e-12)
    assert cm.edge_index[(0, 2)] == 1


def test_conditional_second_moment_matches_brute():
    rng = np.random.default_rng(3)
    pts = rng.random((12, 2)) * 5
    i, j = np.triu_indices(12, 1)
    keep = rng.random(len(i)) < 0.4
    i, j = i[keep][:15], j[keep][:15]
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    edges = EdgeSet(i, j, d)
    got = conditional_second_moment_v2(edges, 0.5, pts, block=4)
    m = len(i)
    brute = 0.0
    for a in range(m):
        for b in range(m):
            if a == b:
                c = 1.0
            else:
                c = increment_corr_exact(pts[i[a]], pts[j[a]], pts[i[b]], pts[j[b]], 0.5)
            brute += c * c
    brute *= 2.0 / m
    assert math.isclose(got, brute, rel_tol=1e-10)


def test_conditional_moment_predicts_v2_variance():
    # E[V2^2 | configuration] against the empirical second moment over fields
    window = Window((0.0, 0.0), 6.0, 3.0)
    cfg = sample_poisson(1.0, window, substream(21, "pp"))
    tri = triangulate(cfg)
    edges = anchored_edges(tri, window)
    pred = conditional_second_moment_v2(edges, P.alpha, cfg.points)
    mat = sample_field_many(cfg, P, substream(21, "field"), draws=4000)
    vals = np.empty(4000)
    for k in range(4000):
        s = FieldSample(cfg, mat.values[:, k], P)
        vals[k] = compute_v2(s, edges).value
    emp = float(np.mean(vals * vals))
    assert abs(np.mean(vals)) < 5 * np.std(vals) / math.sqrt(4000)
    assert abs(emp - pred) / pred < 0.15


def test_contraction_routes_agree():
    window = Window((0.0, 0.0), 8.0, 4.0)
    cfg = sample_poisson(1.0, window, substream(5, "pp"))
    tri = triangulate(cfg)
    edges = anchored_edges(tri, window)
    a = contraction_norm_v2(edges, 0.5, cfg.points, method="direct")
    b = contraction_norm_v2(edges, 0.5, cfg.points, method="vertex")
    assert math.isclose(a, b, rel_tol=1e-10)
    c = contraction_norm_v2(edges, 0.5, cfg.points, method="auto")
    assert c in (a, b)


def test_contraction_matches_quadruple_sum():
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.3, 1.2), (2.0, 1.5), (1.1, 2.2)])
    i = np.array([0, 0, 1, 2])
    j = np.array([1, 2, 3, 4])
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    edges = EdgeSet(i, j, d)
    got = contraction_norm_v2(edges, 0.5, pts, method="direct")
    M = corr_matrix(pts, edges, 0.5).entries
    m = len(i)
    brute = float(np.einsum("kl,ij,ki,lj->", M, M, M, M)) / (m * m)
    assert math.isclose(got, brute, rel_tol=1e-12)


def test_contraction_cap_and_validation():
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
    edges = EdgeSet([0, 0], [1, 2], [1.0, 1.0])
    with pytest.raises(ResourceLimitError):
        contraction_norm_v2(edges, 0.5, pts, cap=1)
    with pytest.raises(ParameterError):
        contraction_norm_v2(edges, 0.5, pts, method="nonsense")
    with pytest.raises(DegenerateInputError):
        contraction_norm_v2(EdgeSet([], [], []), 0.5, pts)
