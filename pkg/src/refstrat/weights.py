"""Exact sample and stratum weights.

Weights are held as integer numerators over one common denominator, which
keeps sums exact and makes the least common denominator needed by the
weighted bootstrap available for free.  Dyadic weights (denominator a power
of two, as produced by halving refinements) additionally have the compact
``(numerator, log2_denominator)`` form used in the text file formats.
Non-dyadic weights (e.g. ``1/N`` for SRS with ``N`` not a power of two)
are exact rationals; on disk their denominator field is written ``r<den>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

#: Largest common denominator handled with int64 numerators.
MAX_DENOMINATOR = 2**62


class WeightOverflow(OverflowError):
    """Common denominator too large for exact int64 arithmetic."""


@dataclass(frozen=True, order=False)
class DyadicWeight:
    numerator: int
    log2_denominator: int

    def __post_init__(self):
        if self.numerator < 0 or self.log2_denominator < 0:
            raise ValueError("numerator and log2_denominator must be non-negative")

    @classmethod
    def from_fraction(cls, f: Fraction) -> "DyadicWeight":
        f = Fraction(f)
        den = f.denominator
        if den & (den - 1):
            raise ValueError(f"{f} is not dyadic")
        return cls(f.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.log2_denominator)

    def __add__(self, other: "DyadicWeight") -> "DyadicWeight":
        return DyadicWeight.from_fraction(self.to_fraction() + other.to_fraction())

    def __eq__(self, other):
        if isinstance(other, DyadicWeight):
            return self.to_fraction() == other.to_fraction()
        return NotImplemented

    def __lt__(self, other: "DyadicWeight") -> bool:
        return self.to_fraction() < other.to_fraction()

    def __hash__(self):
        return hash(self.to_fraction())

    def __float__(self):
        return self.numerator / (1 << self.log2_denominator)


def is_dyadic(f: Fraction) -> bool:
    d = Fraction(f).denominator
    return d & (d - 1) == 0


def common_form(fracs) -> tuple[np.ndarray, int]:
    """Express rationals as int64 numerators over their least common denominator."""
    fracs = [Fraction(f) for f in fracs]
    den = 1
    for d in {f.denominator for f in fracs}:
        den = math.lcm(den, d)
    if den > MAX_DENOMINATOR:
        raise WeightOverflow(
            f"common denominator {den} exceeds 2**62; coarsen the weights")
    nums = np.fromiter((f.numerator * (den // f.denominator) for f in fracs),
                       dtype=np.int64, count=len(fracs))
    return nums, den


def rescale(nums: np.ndarray, den: int, new_den: int) -> np.ndarray:
    """Numerators over ``den`` re-expressed over a multiple ``new_den``."""
    if new_den % den:
        raise ValueError("new denominator must be a multiple of the old one")
    if new_den > MAX_DENOMINATOR:
        raise WeightOverflow(f"common denominator {new_den} exceeds 2**62")
    return nums * (new_den // den)


def reduce_common(nums: np.ndarray, den: int) -> tuple[np.ndarray, int]:
    """Divide numerators and denominator by their gcd."""
    g = int(np.gcd.reduce(nums)) if len(nums) else den
    g = math.gcd(g, den)
    if g > 1:
        return nums // g, den // g
    return nums, den


def format_weight(num: int, den: int) -> tuple[str, str]:
    """Text fields ``(numerator, denominator-field)`` for one weight."""
    f = Fraction(int(num), int(den))
    if is_dyadic(f):
        w = DyadicWeight.from_fraction(f)
        return str(w.numerator), str(w.log2_denominator)
    return str(f.numerator), f"r{f.denominator}"


def parse_weight(num_field: str, den_field: str) -> Fraction:
    den_field = den_field.strip()
    if den_field.startswith("r"):
        return Fraction(int(num_field), int(den_field[1:]))
    return Fraction(int(num_field), 1 << int(den_field))
