import math

import numpy as np
import pytest

from refstrat.distributions import make_stream
from refstrat.metrics import (METRIC_HEADER, condition_number, correlation_stats, metric_row,
                              nearest_brute, nearest_tree, voronoi_volumes, wd2)


def test_voronoi_one_dimensional_cells():
    est = voronoi_volumes([[0.1], [0.2]], 200_000, make_stream(1))
    assert est.cell_volumes == pytest.approx([0.15, 0.85], abs=0.005)
    assert est.counts.sum() == 200_000
    even = voronoi_volumes([[0.25], [0.75]], 200_000, make_stream(2))
    assert even.v_metric < 0.01


def test_voronoi_single_point_warns():
    with pytest.warns(RuntimeWarning):
        est = voronoi_volumes([[0.3, 0.3]], 1000, make_stream(1))
    assert est.v_metric == 0.0 and est.max_vol == 1.0
    with pytest.raises(ValueError):
        voronoi_volumes([[0.3], [0.4]], 10, None)


def test_brute_and_tree_agree_with_ties():
    pts = np.array([[0.25, 0.5], [0.75, 0.5], [0.5, 0.9], [0.1, 0.1]])
    probes = np.vstack([make_stream(3).random((5000, 2)), [[0.5, 0.5], [0.5, 0.2]]])
    a, b = nearest_brute(pts, probes), nearest_tree(pts, probes)
    assert np.array_equal(a, b)
    # equidistant from points 0 and 1: lowest index wins
    assert a[-2] == 0


def test_voronoi_methods_agree():
    pts = make_stream(4).random((30, 4))
    a = voronoi_volumes(pts, 20_000, make_stream(5), method="brute")
    b = voronoi_volumes(pts, 20_000, make_stream(5), method="tree")
    assert np.array_equal(a.counts, b.counts)


def test_voronoi_probe_count_stability():
    pts = make_stream(6).random((20, 2))
    v = [voronoi_volumes(pts, 200_000, make_stream(s)).v_metric for s in (7, 8)]
    assert v[0] == pytest.approx(v[1], rel=0.02)


def test_wd2_single_point_closed_form():
    for n in (1, 3):
        assert wd2(np.full((1, n), 0.37)) == pytest.approx(math.sqrt(1.5**n - (4 / 3) ** n))
    with pytest.raises(ValueError):
        wd2(np.empty((0, 2)))


def test_wd2_invariances():
    pts = make_stream(9).random((40, 3))
    base = wd2(pts)
    assert wd2((pts + [0.3, 0.61, 0.05]) % 1.0) == pytest.approx(base, rel=1e-12)
    assert wd2(np.vstack([pts, pts])) == pytest.approx(base, rel=1e-12)
    assert wd2(pts[::-1]) == pytest.approx(base, rel=1e-12)
    assert wd2(pts[:, [2, 0, 1]]) == pytest.approx(base, rel=1e-12)


def test_wd2_brute_force():
    pts = make_stream(10).random((7, 2))
    acc = sum(np.prod([1.5 - abs(a - b) * (1 - abs(a - b)) for a, b in zip(p, q)])
              for p in pts for q in pts)
    assert wd2(pts) == pytest.approx(math.sqrt(acc / 49 - (4 / 3) ** 2))


def test_correlation_stats():
    pts = np.array([[0.1, 0.2], [0.5, 0.6], [0.9, 1.0]])
    assert correlation_stats(pts).max_rho == pytest.approx(1.0)
    with pytest.raises(ValueError):
        correlation_stats(np.array([[0.1, 0.5], [0.2, 0.5], [0.3, 0.5]]))
    with pytest.raises(ValueError):
        correlation_stats(pts[:2])


def test_condition_number_examples_and_invariances():
    # symmetric 2x2 design: X^T X is a multiple of the identity
    grid = np.array([[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])
    assert condition_number(grid) == pytest.approx(1.0)
    pts = make_stream(11).random((25, 4))
    k = condition_number(pts)
    assert condition_number(1.0 - pts) == pytest.approx(k)
    assert condition_number(pts[::-1]) == pytest.approx(k)
    assert condition_number(pts[:, [3, 1, 0, 2]]) == pytest.approx(k)
    assert condition_number(pts[:3]) == math.inf
    assert condition_number(np.full((5, 2), 0.5)) == math.inf


def test_metric_row():
    pts = make_stream(12).random((8, 2))
    row = metric_row("SRS", pts, 3, make_stream(13), n_probe=2000).split(",")
    assert len(row) == len(METRIC_HEADER.split(","))
    assert row[:4] == ["SRS", "8", "2", "3"]
    one_d = metric_row("SRS", pts[:, :1], 3, make_stream(13), 2000, with_voronoi=False)
    assert one_d.split(",")[4] == "" and one_d.split(",")[6] == ""
