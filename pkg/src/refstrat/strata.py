"""Hyperrectangular stratifications of the unit probability hypercube.

A design is an immutable snapshot: a set of axis-aligned boxes ``[lo, hi)``
(closed at the upper domain boundary) with exact probability weights.
Boxes live purely in probability space; physical coordinates appear only
when samples are mapped through the marginal quantile functions.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .weights import common_form, format_weight, parse_weight, reduce_common, rescale


class DesignClass(str, enum.Enum):
    SBSD = "SBSD"  # equal weights, congruent hypercubes
    ABSD = "ABSD"  # equal weights, arbitrary boxes
    UBSD = "UBSD"  # unequal weights


class UnsupportedPartition(ValueError):
    """Division counts that cannot be represented with dyadic weights."""


@dataclass(frozen=True)
class Stratum:
    id: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    weight: Fraction

    @property
    def edges(self) -> tuple[float, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, u) -> bool:
        u = np.asarray(u, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return bool(np.all((u >= lo) & ((u < hi) | ((hi == 1.0) & (u <= 1.0)))))


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StratifiedDesign:
    """Boxes ``lo[k] <= u < hi[k]`` with weights ``weight_num[k] / weight_den``."""

    ids: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    weight_num: np.ndarray
    weight_den: int
    design_class: DesignClass = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "ids", _frozen(self.ids, np.int64))
        object.__setattr__(self, "lo", _frozen(np.atleast_2d(self.lo), float))
        object.__setattr__(self, "hi", _frozen(np.atleast_2d(self.hi), float))
        num, den = reduce_common(np.asarray(self.weight_num, dtype=np.int64), int(self.weight_den))
        object.__setattr__(self, "weight_num", _frozen(num, np.int64))
        object.__setattr__(self, "weight_den", den)
        if self.design_class is None:
            object.__setattr__(self, "design_class", classify(self))
        if not (len(self.ids) == len(self.lo) == len(self.hi) == len(self.weight_num)):
            raise ValueError("ids, bounds and weights must have equal length")

    @classmethod
    def from_boxes(cls, lo, hi, weights=None, ids=None, design_class=None):
        """Build a design from box bounds; weights default to box volumes."""
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if weights is None:
            weights = [_box_volume(l, h) for l, h in zip(lo, hi)]
        nums, den = common_form(weights)
        if ids is None:
            ids = np.arange(len(lo))
        return cls(ids, lo, hi, nums, den, design_class)

    @property
    def dimension(self) -> int:
        return self.lo.shape[1]

    def __len__(self):
        return len(self.ids)

    @property
    def weights(self) -> list[Fraction]:
        return [Fraction(int(n), self.weight_den) for n in self.weight_num]

    @property
    def weights_float(self) -> np.ndarray:
        return self.weight_num / self.weight_den

    @property
    def strata(self) -> list[Stratum]:
        return [self.stratum(int(i)) for i in self.ids]

    def index_of(self, stratum_id: int) -> int:
        hits = np.flatnonzero(self.ids == stratum_id)
        if not len(hits):
            raise KeyError(f"no stratum with id {stratum_id}")
        return int(hits[0])

    def index_of_many(self, stratum_ids) -> np.ndarray:
        """Row indices for an array of ids."""
        order = np.argsort(self.ids, kind="stable")
        ids = np.asarray(stratum_ids)
        pos = np.searchsorted(self.ids, ids, sorter=order)
        pos = np.minimum(pos, len(order) - 1)
        rows = order[pos]
        if np.any(self.ids[rows] != ids):
            raise KeyError("unknown stratum id")
        return rows

    def stratum(self, stratum_id: int) -> Stratum:
        k = self.index_of(stratum_id)
        return Stratum(int(self.ids[k]), tuple(self.lo[k]), tuple(self.hi[k]),
                       Fraction(int(self.weight_num[k]), self.weight_den))

    @property
    def next_id(self) -> int:
        return int(self.ids.max()) + 1 if len(self.ids) else 0

    def weight_sum(self) -> Fraction:
        return Fraction(int(self.weight_num.sum()), self.weight_den)

    def locate(self, u) -> np.ndarray:
        """Row index of the box containing each point (``-1`` if none)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.full(len(u), -1, dtype=np.int64)
        upper_closed = self.hi >= 1.0
        for start in range(0, len(u), 512):
            pts = u[start:start + 512, None, :]
            inside = (pts >= self.lo) & ((pts < self.hi) | (upper_closed & (pts <= self.hi)))
            hit = inside.all(axis=2)
            any_hit = hit.any(axis=1)
            out[start:start + 512] = np.where(any_hit, hit.argmax(axis=1), -1)
        return out


def _box_volume(lo, hi) -> Fraction:
    v = Fraction(1)
    for l, h in zip(lo, hi):
        v *= Fraction(float(h)) - Fraction(float(l))
    return v


def classify(design: StratifiedDesign) -> DesignClass:
    if len(design.weight_num) == 0 or np.any(design.weight_num != design.weight_num[0]):
        return DesignClass.UBSD
    edges = design.hi - design.lo
    if np.allclose(edges, edges[0, 0], rtol=1e-12, atol=0.0):
        return DesignClass.SBSD
    return DesignClass.ABSD


def _check_divisions(divisions):
    divisions = [int(d) for d in divisions]
    if not divisions or any(d < 1 for d in divisions):
        raise ValueError("division counts must be >= 1")
    return divisions


def make_grid(divisions) -> StratifiedDesign:
    """Regular grid design with any division counts (weights ``1/prod``)."""
    divisions = _check_divisions(divisions)
    idx = np.stack(np.meshgrid(*[np.arange(d) for d in divisions], indexing="ij"), -1)
    idx = idx.reshape(-1, len(divisions))
    div = np.asarray(divisions, dtype=float)
    lo = idx / div
    hi = (idx + 1) / div
    # exact upper boundary regardless of rounding in (k+1)/d
    hi[idx + 1 == np.asarray(divisions)] = 1.0
    m = len(idx)
    design = StratifiedDesign(np.arange(m), lo, hi, np.ones(m, dtype=np.int64), m)
    return design


def make_sbsd(n: int, divisions_per_dim) -> StratifiedDesign:
    """Grid design with power-of-two division counts.

    Class is SBSD when all counts are equal, ABSD otherwise.
    """
    divisions = _check_divisions(divisions_per_dim)
    if len(divisions) != n:
        raise ValueError(f"expected {n} division counts, got {len(divisions)}")
    for d in divisions:
        if d & (d - 1):
            raise UnsupportedPartition(f"division count {d} is not a power of two")
    return make_grid(divisions)


def greedy_divisions(n: int, n_strata: int) -> list[int]:
    """Power-of-two division counts with product ``2**floor(log2(n_strata))``.

    Counts are doubled one at a time on the least-divided axis (lowest index
    first), which yields a hypercube grid whenever the stratum count allows.
    """
    if n < 1 or n_strata < 1:
        raise ValueError("need n >= 1 and n_strata >= 1")
    divisions = [1] * n
    for _ in range(n_strata.bit_length() - 1):
        i = min(range(n), key=lambda j: divisions[j])
        divisions[i] *= 2
    return divisions


def grid_divisions(n: int, n_strata: int) -> list[int]:
    """Division counts for an ``n_strata``-cell balanced grid.

    Equal counts when ``n_strata`` is a perfect n-th power, else greedy
    halving (``n_strata`` must then be a power of two).
    """
    m = round(n_strata ** (1.0 / n))
    for cand in (m - 1, m, m + 1):
        if cand >= 1 and cand**n == n_strata:
            return [cand] * n
    if n_strata & (n_strata - 1):
        raise UnsupportedPartition(
            f"{n_strata} strata is neither a perfect {n}-th power nor a power of two")
    return greedy_divisions(n, n_strata)


def _as_fraction(z) -> Fraction:
    if isinstance(z, (Fraction, int)):
        return Fraction(z)
    return Fraction(repr(float(z)))


def split_stratum(design: StratifiedDesign, stratum_id: int, dim: int, z=Fraction(1, 2)):
    """Split one box in two along ``dim`` at fraction ``z`` of its edge.

    The lower child keeps ``stratum_id``; the upper child gets a fresh id.
    Child weights are ``z*w`` and ``(1-z)*w``.  Float ``z`` is read as its
    shortest decimal representation, so ``0.5`` stays dyadic.

    Returns ``(new_design, new_stratum_id)``.
    """
    if not 0 <= dim < design.dimension:
        raise ValueError(f"dim {dim} out of range for dimension {design.dimension}")
    zf = _as_fraction(z)
    if not 0 < zf < 1:
        raise ValueError(f"split fraction must lie in (0, 1), got {z}")
    k = design.index_of(stratum_id)
    w = Fraction(int(design.weight_num[k]), design.weight_den)
    w_lo, w_hi = zf * w, (1 - zf) * w
    den = math.lcm(design.weight_den, w_lo.denominator, w_hi.denominator)
    nums = rescale(design.weight_num, design.weight_den, den)
    new_id = design.next_id

    lo = np.array(design.lo)
    hi = np.array(design.hi)
    cut = lo[k, dim] + float(zf) * (hi[k, dim] - lo[k, dim])
    child_lo = lo[k].copy()
    child_lo[dim] = cut
    child_hi = hi[k].copy()
    hi[k, dim] = cut

    nums = np.append(nums, w_hi.numerator * (den // w_hi.denominator))
    nums[k] = w_lo.numerator * (den // w_lo.denominator)
    new = StratifiedDesign(np.append(design.ids, new_id), np.vstack([lo, child_lo]),
                           np.vstack([hi, child_hi]), nums, den)
    return new, new_id


@dataclass
class ValidationReport:
    overlaps: list[tuple[int, int]] = field(default_factory=list)
    coverage_gap: Fraction = Fraction(0)
    class_mismatch: tuple[str, str] | None = None
    weight_mismatch: list[int] = field(default_factory=list)
    out_of_bounds: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.overlaps or self.coverage_gap or self.class_mismatch
                    or self.weight_mismatch or self.out_of_bounds)

    def lines(self) -> list[str]:
        out = [f"overlap: strata {a} and {b}" for a, b in self.overlaps]
        if self.coverage_gap:
            out.append(f"coverage gap: weights sum to 1 - ({self.coverage_gap})")
        if self.class_mismatch:
            out.append("class mismatch: declared %s, actual %s" % self.class_mismatch)
        out += [f"weight differs from box volume: stratum {i}" for i in self.weight_mismatch]
        out += [f"bounds outside [0, 1]: stratum {i}" for i in self.out_of_bounds]
        return out


def find_overlaps(lo: np.ndarray, hi: np.ndarray, ids=None) -> list[tuple[int, int]]:
    """All pairs of half-open boxes with intersecting interiors.

    Sweep along the first axis: after sorting by ``lo[:, 0]`` a box can only
    meet later boxes whose lower edge lies below its upper edge.
    """
    m = len(lo)
    ids = np.arange(m) if ids is None else np.asarray(ids)
    order = np.argsort(lo[:, 0], kind="stable")
    slo, shi = lo[order], hi[order]
    ends = np.searchsorted(slo[:, 0], shi[:, 0], side="left")
    pairs = []
    for a in range(m):
        b = ends[a]
        if b <= a + 1:
            continue
        inter = ((slo[a] < shi[a + 1:b]) & (slo[a + 1:b] < shi[a])).all(axis=1)
        for j in np.flatnonzero(inter):
            p, q = int(ids[order[a]]), int(ids[order[a + 1 + j]])
            pairs.append((min(p, q), max(p, q)))
    return pairs


def validate(design: StratifiedDesign, check_volumes: bool = True) -> ValidationReport:
    """Disjointness, exact coverage, class consistency and volume checks."""
    rep = ValidationReport()
    bad = np.flatnonzero((design.lo < 0).any(axis=1) | (design.hi > 1).any(axis=1)
                         | (design.hi <= design.lo).any(axis=1))
    rep.out_of_bounds = design.ids[bad].tolist()
    rep.overlaps = find_overlaps(design.lo, design.hi, design.ids)
    rep.coverage_gap = 1 - design.weight_sum()
    actual = classify(design)
    if actual != design.design_class:
        rep.class_mismatch = (design.design_class.value, actual.value)
    if check_volumes:
        vol = np.prod(design.hi - design.lo, axis=1)
        w = design.weights_float
        wrong = np.flatnonzero(~np.isclose(vol, w, rtol=1e-9, atol=0.0))
        rep.weight_mismatch = design.ids[wrong].tolist()
    return rep


def dumps(design: StratifiedDesign) -> str:
    """Line format: ``dim=n`` then ``id lo_1..lo_n hi_1..hi_n num log2den``."""
    buf = io.StringIO()
    buf.write(f"dim={design.dimension}\n")
    for k in range(len(design)):
        num, den = format_weight(design.weight_num[k], design.weight_den)
        fields = [str(int(design.ids[k]))]
        fields += [repr(float(v)) for v in design.lo[k]]
        fields += [repr(float(v)) for v in design.hi[k]]
        fields += [num, den]
        buf.write(" ".join(fields) + "\n")
    return buf.getvalue()


def loads(text: str) -> StratifiedDesign:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    head = lines[0].strip()
    if not head.startswith("dim="):
        raise ValueError("design file must start with 'dim=n'")
    n = int(head[4:])
    ids, lo, hi, w = [], [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2 * n + 3:
            raise ValueError(f"bad stratum line: {ln!r}")
        ids.append(int(parts[0]))
        lo.append([float(v) for v in parts[1:1 + n]])
        hi.append([float(v) for v in parts[1 + n:1 + 2 * n]])
        w.append(parse_weight(parts[-2], parts[-1]))
    nums, den = common_form(w)
    return StratifiedDesign(np.array(ids), np.array(lo).reshape(-1, n),
                            np.array(hi).reshape(-1, n), nums, den)
