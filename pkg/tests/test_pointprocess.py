"""Poisson sampling, window geometry, lexicographic helpers, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbfqv.errors import ParameterError, ResourceLimitError
from fbfqv.pointprocess import (
    PointConfiguration,
    Window,
    lex_argsort,
    lex_less,
    lex_less_rows,
    rescale,
    sample_poisson,
)
from fbfqv.streams import substream


def test_window_areas_and_bounds():
    w = Window((0.0, 0.0), 10.0, 5.0)
    assert w.analysis_area == 400.0
    assert w.simulation_area == 900.0
    assert w.analysis_bounds == (-10.0, 10.0, -10.0, 10.0)
    assert w.simulation_bounds == (-15.0, 15.0, -15.0, 15.0)


def test_window_membership_half_open():
    w = Window((0.0, 0.0), 1.0, 0.0)
    # half-open: lower/left edges excluded, upper/right included
    assert not w.contains_analysis(np.array([[-1.0, 0.0]]))[0]
    assert w.contains_analysis(np.array([[1.0, 0.0]]))[0]
    assert w.contains_analysis(np.array([[0.5, 1.0]]))[0]
    assert not w.contains_analysis(np.array([[0.5, -1.0]]))[0]


def test_window_validation():
    with pytest.raises(ParameterError):
        Window((0.0, 0.0), -1.0, 0.0)
    with pytest.raises(ParameterError):
        Window((0.0, 0.0), 1.0, -0.5)


def test_poisson_count_moments():
    w = Window((0.0, 0.0), 10.0, 0.0)  # area 400
    counts = [len(sample_poisson(1.0, w, substream(5, "pp", k))) for k in range(200)]
    mean = np.mean(counts)
    # Poisson(400): SE of the mean over 200 reps is sqrt(400/200) ~ 1.4
    assert abs(mean - 400.0) < 5 * np.sqrt(400.0 / 200.0)
    var = np.var(counts, ddof=1)
    assert 0.75 * 400 < var < 1.30 * 400


def test_points_inside_simulation_window():
    w = Window((3.0, -2.0), 5.0, 2.0)
    cfg = sample_poisson(1.0, w, substream(6, "pp"))
    assert np.all(w.contains_simulation(cfg.points))


def test_poisson_deterministic():
    w = Window((0.0, 0.0), 5.0, 0.0)
    a = sample_poisson(1.0, w, substream(42, "pp", 3))
    b = sample_poisson(1.0, w, substream(42, "pp", 3))
    assert np.array_equal(a.points, b.points)


def test_expected_cap_enforced():
    w = Window((0.0, 0.0), 100.0, 0.0)
    with pytest.raises(ResourceLimitError):
        sample_poisson(10.0, w, substream(1, "pp"), expected_cap=1000)


def test_invalid_intensity():
    with pytest.raises(ParameterError):
        sample_poisson(0.0, Window((0, 0), 1.0, 0.0), substream(1, "pp"))


def test_rescale_scales_coordinates_and_window():
    w = Window((1.0, 1.0), 2.0, 1.0)
    cfg = PointConfiguration(np.array([[0.5, 0.25], [1.0, 2.0]]), w)
    out = rescale(cfg, 3.0)
    assert np.allclose(out.points, cfg.points * 3.0)
    assert out.window.half_side == 6.0
    assert out.window.margin == 3.0


def test_lex_less_on_ties():
    assert lex_less((1.0, 2.0), (1.0, 3.0))
    assert not lex_less((1.0, 3.0), (1.0, 2.0))
    assert not lex_less((1.0, 2.0), (1.0, 2.0))
    assert lex_less((0.0, 9.0), (1.0, -9.0))


def test_lex_rows_matches_scalar():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 3, size=(50, 2)).astype(float)
    b = rng.integers(0, 3, size=(50, 2)).astype(float)
    rows = lex_less_rows(a, b)
    for k in range(50):
        assert rows[k] == lex_less(a[k], b[k])


def test_lex_argsort_orders():
    pts = np.array([[2.0, 1.0], [1.0, 5.0], [1.0, 2.0], [0.0, 0.0]])
    order = lex_argsort(pts)
    s = pts[order]
    for k in range(len(s) - 1):
        assert lex_less(s[k], s[k + 1])


def test_csv_round_trip(tmp_path):
    w = Window((0.0, 0.0), 5.0, 1.0)
    cfg = sample_poisson(0.5, w, substream(9, "pp"))
    path = tmp_path / "pts.csv"
    cfg.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "index,x,y"
    back = PointConfiguration.from_csv(path, w)
    assert np.array_equal(back.points, cfg.points)
    assert np.array_equal(back.index, cfg.index)


def test_points_are_immutable():
    w = Window((0.0, 0.0), 5.0, 0.0)
    cfg = PointConfiguration(np.array([[1.0, 1.0], [2.0, 2.0]]), w)
    with pytest.raises(ValueError):
        cfg.points[0, 0] = 9.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=12))
def test_lex_sort_is_total_order(coords):
    pts = np.array(coords, dtype=float)
    order = lex_argsort(pts)
    s = pts[order]
    for k in range(len(s) - 1):
        assert not lex_less(s[k + 1], s[k])
