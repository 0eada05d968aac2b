from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from refstrat.weights import (DyadicWeight, WeightOverflow, common_form, format_weight,
                              is_dyadic, parse_weight, reduce_common, rescale)


def test_dyadic_exact_sum():
    parts = [DyadicWeight(1, 1), DyadicWeight(1, 2), DyadicWeight(1, 3), DyadicWeight(1, 3)]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    assert total == DyadicWeight(1, 0)
    assert DyadicWeight(2, 2) == DyadicWeight(1, 1)
    assert DyadicWeight(1, 3) < DyadicWeight(1, 2)
    assert float(DyadicWeight(3, 2)) == 0.75


def test_dyadic_rejects_non_dyadic():
    with pytest.raises(ValueError):
        DyadicWeight.from_fraction(Fraction(1, 3))
    with pytest.raises(ValueError):
        DyadicWeight(-1, 2)


def test_common_form_and_reduce():
    nums, den = common_form([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    assert den == 4 and nums.tolist() == [2, 1, 1]
    nums, den = common_form([Fraction(1, 3), Fraction(2, 3)])
    assert den == 3 and nums.sum() == den
    n2, d2 = reduce_common(np.array([2, 4]), 8)
    assert (n2.tolist(), d2) == ([1, 2], 4)
    assert rescale(np.array([1, 1]), 2, 8).tolist() == [4, 4]


def test_overflow():
    with pytest.raises(WeightOverflow):
        common_form([Fraction(1, 2**63), 1 - Fraction(1, 2**63)])


def test_format_parse():
    assert format_weight(1, 8) == ("1", "3")
    assert format_weight(2, 6) == ("1", "r3")
    assert parse_weight("1", "3") == Fraction(1, 8)
    assert parse_weight("1", "r3") == Fraction(1, 3)
    assert is_dyadic(Fraction(5, 16)) and not is_dyadic(Fraction(1, 6))


@given(st.lists(st.integers(0, 20), min_size=1, max_size=30))
def test_halving_sequences_sum_to_one(splits):
    # repeatedly halve chosen members of a partition of 1
    ws = [Fraction(1)]
    for s in splits:
        i = s % len(ws)
        w = ws.pop(i)
        ws += [w / 2, w / 2]
    nums, den = common_form(ws)
    assert int(nums.sum()) == den
    total = DyadicWeight(0, 0)
    for w in ws:
        total = total + DyadicWeight.from_fraction(w)
    assert total.to_fraction() == 1
