from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from refstrat.distributions import make_stream
from refstrat.strata import (DesignClass, StratifiedDesign, UnsupportedPartition, classify,
                             dumps, grid_divisions, loads, make_grid, make_sbsd,
                             split_stratum, validate)


def test_make_sbsd_examples():
    d = make_sbsd(2, [2, 2])
    assert len(d) == 4
    assert d.design_class is DesignClass.SBSD
    assert all(w == Fraction(1, 4) for w in d.weights)
    assert sorted(map(tuple, d.lo.tolist())) == [(0, 0), (0, .5), (.5, 0), (.5, .5)]
    d = make_sbsd(3, [4, 2, 1])
    assert len(d) == 8 and d.design_class is DesignClass.ABSD
    assert validate(d).ok


def test_make_sbsd_errors():
    with pytest.raises(UnsupportedPartition):
        make_sbsd(2, [3, 2])
    with pytest.raises(ValueError):
        make_sbsd(2, [2])
    with pytest.raises(ValueError):
        make_sbsd(1, [0])


def test_make_grid_non_power_of_two():
    d = make_grid([5, 3])
    assert len(d) == 15 and d.weight_den == 15
    assert validate(d).ok
    assert d.hi.max() == 1.0


def test_grid_divisions():
    assert grid_divisions(2, 16) == [4, 4]
    assert grid_divisions(2, 9) == [3, 3]
    assert grid_divisions(3, 16) in ([4, 2, 2], [2, 4, 2], [2, 2, 4])
    with pytest.raises(UnsupportedPartition):
        grid_divisions(2, 12)


def test_split_examples():
    d = make_sbsd(1, [1])
    d2, new = split_stratum(d, 0, 0)
    assert new == 1
    assert d2.stratum(0).hi == (0.5,) and d2.stratum(1).lo == (0.5,)
    assert d2.weights == [Fraction(1, 2), Fraction(1, 2)]
    d3, _ = split_stratum(make_sbsd(2, [1, 1]), 0, 1, z=0.25)
    assert d3.stratum(0).hi == (1.0, 0.25)
    assert d3.weights == [Fraction(1, 4), Fraction(3, 4)]
    assert d3.design_class is DesignClass.UBSD
    assert validate(d3).ok


def test_split_with_non_dyadic_fraction_stays_exact():
    d, _ = split_stratum(make_sbsd(1, [1]), 0, 0, z=Fraction(1, 3))
    assert d.weight_sum() == 1
    assert d.weights == [Fraction(1, 3), Fraction(2, 3)]
    assert loads(dumps(d)).weights == d.weights


def test_split_errors():
    d = make_sbsd(2, [2, 2])
    with pytest.raises(ValueError):
        split_stratum(d, 0, 2)
    with pytest.raises(ValueError):
        split_stratum(d, 0, 0, z=1.0)
    with pytest.raises(KeyError):
        split_stratum(d, 99, 0)


def test_merge_identity():
    # splitting then taking the union of the children recovers the parent box
    d = make_sbsd(2, [2, 2])
    d2, new = split_stratum(d, 3, 0)
    a, b = d2.stratum(3), d2.stratum(new)
    assert np.allclose(np.minimum(a.lo, b.lo), d.stratum(3).lo)
    assert np.allclose(np.maximum(a.hi, b.hi), d.stratum(3).hi)
    assert a.weight + b.weight == d.stratum(3).weight


def test_validate_detects_problems():
    lo = [[0.0, 0.0], [0.4, 0.0]]
    hi = [[0.5, 1.0], [1.0, 1.0]]
    rep = validate(StratifiedDesign.from_boxes(lo, hi))
    assert rep.overlaps == [(0, 1)]
    assert rep.coverage_gap != 0
    assert any("overlap" in ln for ln in rep.lines())
    gap = StratifiedDesign.from_boxes([[0.0]], [[0.5]])
    assert validate(gap).coverage_gap == Fraction(1, 2)
    wrong = StratifiedDesign.from_boxes([[0.0], [0.5]], [[0.5], [1.0]],
                                        weights=[Fraction(1, 4), Fraction(3, 4)])
    assert validate(wrong).weight_mismatch == [0, 1]
    declared = StratifiedDesign.from_boxes([[0.0], [0.5]], [[0.5], [1.0]],
                                           design_class=DesignClass.UBSD)
    assert validate(declared).class_mismatch == ("UBSD", "SBSD")


def test_classify():
    assert classify(make_sbsd(2, [4, 4])) is DesignClass.SBSD
    assert classify(make_sbsd(2, [4, 2])) is DesignClass.ABSD


def test_locate_boundaries():
    d = make_sbsd(2, [2, 2])
    rows = d.locate([[0.5, 0.5], [1.0, 1.0], [0.0, 0.0], [0.49, 0.99]])
    boxes = [d.stratum(int(d.ids[r])) for r in rows]
    assert boxes[0].lo == (0.5, 0.5)
    assert boxes[1].hi == (1.0, 1.0)
    assert boxes[2].lo == (0.0, 0.0)
    assert boxes[3].lo == (0.0, 0.5)
    assert d.locate([[1.5, 0.2]])[0] == -1


def test_index_of_many():
    d = make_sbsd(2, [4, 4])
    assert d.index_of_many([3, 0, 15]).tolist() == [3, 0, 15]
    with pytest.raises(KeyError):
        d.index_of_many([16])


def test_dumps_loads_bit_exact():
    d = make_sbsd(2, [2, 2])
    stream = make_stream(4)
    cuts = [0.5, 0.25, 0.375, 0.2]
    for _ in range(20):
        sid = int(d.ids[stream.integers(len(d))])
        z = cuts[int(stream.integers(4))]
        d, _ = split_stratum(d, sid, int(stream.integers(2)), z=z)
    back = loads(dumps(d))
    assert np.array_equal(back.lo, d.lo) and np.array_equal(back.hi, d.hi)
    assert np.array_equal(back.ids, d.ids)
    assert back.weights == d.weights
    assert dumps(back) == dumps(d)


def test_deep_irregular_splits_overflow():
    from refstrat.weights import WeightOverflow
    d = make_sbsd(1, [1])
    with pytest.raises(WeightOverflow):
        for z in (0.123456789, 0.987654321, 0.314159265, 0.271828183):
            d, _ = split_stratum(d, 0, 0, z=z)


def test_loads_errors():
    with pytest.raises(ValueError):
        loads("n=2\n")
    with pytest.raises(ValueError):
        loads("dim=2\n0 0 0 1\n")


def test_child_draws_uniform_in_box():
    d, new = split_stratum(make_sbsd(2, [1, 1]), 0, 0, z=0.3)
    box = d.stratum(new)
    r = make_stream(9).random((4000, 2))
    u = np.asarray(box.lo) + (np.asarray(box.hi) - np.asarray(box.lo)) * r
    assert all(box.contains(p) for p in u[:50])
    assert stats.kstest(u[:, 0], stats.uniform(0.3, 0.7).cdf).pvalue > 1e-3


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 3), ops=st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 2),
                                                  st.sampled_from([0.5, 0.25, 0.75, 0.3])),
                                        min_size=1, max_size=25))
def test_split_sequences_keep_partition(n, ops):
    d = make_sbsd(n, [1] * n)
    for pick, dim, z in ops:
        sid = int(d.ids[pick % len(d)])
        d, _ = split_stratum(d, sid, dim % n, z=z)
    rep = validate(d)
    assert not rep.overlaps and not rep.out_of_bounds and not rep.weight_mismatch
    assert d.weight_sum() == 1
    pts = make_stream(len(ops)).random((200, n))
    assert np.all(d.locate(pts) >= 0)
