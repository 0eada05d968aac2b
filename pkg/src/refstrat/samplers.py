"""Sample generators and sample-size extension.

Generators: simple random sampling (SRS), stratified sampling on a given
design, Latin hypercube sampling (LHS, optionally with Iman-Conover
correlation reduction).  Extensions: refined stratified sampling (RSS,
one sample at a time), hierarchical LHS (HLHS) and replicated LHS (RLH).

Every generator is a pure function of its inputs and a numpy ``Generator``.
Random numbers are consumed in a fixed order documented on each function so
runs replay exactly.
"""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import special

from .distributions import Distribution, format_distribution, parse_distribution
from .strata import StratifiedDesign, grid_divisions, make_grid
from .weights import common_form, format_weight, parse_weight, reduce_common


class StructureError(ValueError):
    """Input set lacks the structure an extension needs."""


@dataclass(frozen=True)
class SampleRecord:
    index: int
    u: tuple[float, ...]
    x: tuple[float, ...]
    weight: Fraction
    stratum_id: int | None


@dataclass(frozen=True)
class SampleSet:
    """Samples in probability space ``u`` and physical space ``x``.

    Weights are ``weight_num / weight_den`` exactly.  ``stratum_id`` is -1
    for samples that do not belong to a design (SRS, LHS).
    ``latin_resolution`` is the number of equal-probability bins per axis
    for Latin and replicated-Latin sets, 0 otherwise.
    """

    marginals: tuple[Distribution, ...]
    u: np.ndarray
    x: np.ndarray
    weight_num: np.ndarray
    weight_den: int
    stratum_id: np.ndarray
    design: StratifiedDesign | None = None
    generator: str = ""
    seed: int | None = None
    latin_resolution: int = 0

    def __post_init__(self):
        num, den = reduce_common(np.asarray(self.weight_num, dtype=np.int64), int(self.weight_den))
        object.__setattr__(self, "weight_num", num)
        object.__setattr__(self, "weight_den", den)
        object.__setattr__(self, "marginals", tuple(self.marginals))

    def __len__(self):
        return len(self.u)

    @property
    def dimension(self) -> int:
        return self.u.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.weight_num / self.weight_den

    def weight(self, i: int) -> Fraction:
        return Fraction(int(self.weight_num[i]), self.weight_den)

    def weight_sum(self) -> Fraction:
        return Fraction(int(self.weight_num.sum()), self.weight_den)

    @property
    def records(self) -> list[SampleRecord]:
        return [SampleRecord(i, tuple(self.u[i]), tuple(self.x[i]), self.weight(i),
                             None if self.stratum_id[i] < 0 else int(self.stratum_id[i]))
                for i in range(len(self))]


def to_physical(marginals: Sequence[Distribution], u: np.ndarray) -> np.ndarray:
    u = np.atleast_2d(u)
    if u.shape[1] != len(marginals):
        raise ValueError("marginal count does not match dimension")
    if not len(u):
        return np.empty_like(u)
    return np.column_stack([m.inv_cdf(u[:, i]) for i, m in enumerate(marginals)])


def _equal_weights(n: int):
    return np.ones(n, dtype=np.int64), n


def srs(marginals, N: int, stream: np.random.Generator, seed=None) -> SampleSet:
    """``N`` iid points; draws one ``(N, n)`` block of uniforms."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = len(marginals)
    u = stream.random((N, n))
    num, den = _equal_weights(N)
    return SampleSet(tuple(marginals), u, to_physical(marginals, u), num, den,
                     np.full(N, -1), None, "SRS", seed)


def stratified_sample(marginals, design: StratifiedDesign, per_stratum, stream,
                      seed=None) -> SampleSet:
    """``per_stratum[k]`` uniform draws inside box ``k``, weight ``p_k / M_k``.

    Records are ordered by stratum; one ``(N, n)`` block of uniforms is drawn.
    """
    m = len(design)
    if m == 0:
        raise ValueError("empty design")
    counts = np.broadcast_to(np.asarray(per_stratum, dtype=np.int64), (m,)).copy()
    if np.any(counts < 1):
        raise ValueError("every stratum needs at least one sample")
    rows = np.repeat(np.arange(m), counts)
    r = stream.random((len(rows), design.dimension))
    u = design.lo[rows] + (design.hi[rows] - design.lo[rows]) * r
    # keep draws inside the half-open box despite rounding
    u = np.minimum(u, _below(design.hi[rows]))
    L = 1
    for c in np.unique(counts):
        L = math.lcm(L, int(c))
    num = design.weight_num[rows] * (L // counts[rows])
    den = design.weight_den * L
    return SampleSet(tuple(marginals), u, to_physical(marginals, u), num, den,
                     design.ids[rows], design, "SS", seed)


def _below(hi: np.ndarray) -> np.ndarray:
    """Largest admissible coordinate of a half-open box (closed at 1)."""
    return np.where(hi < 1.0, np.nextafter(hi, -np.inf), hi)


def _vdw_scores(n: int) -> np.ndarray:
    return special.ndtri(np.arange(1, n + 1) / (n + 1.0))


def iman_conover(u: np.ndarray) -> np.ndarray:
    """Re-pair columns to drive the rank correlation towards the identity.

    Single pass with van der Waerden scores: columns of scores ordered like
    the input ranks are decorrelated by the inverse Cholesky factor of their
    correlation matrix, and each input column is re-sorted to follow the
    ranks of the decorrelated scores.  Marginal values are untouched.
    """
    N, n = u.shape
    if N < 2:
        raise ValueError("need at least 2 rows")
    if n == 1:
        return u.copy()
    ranks = np.argsort(np.argsort(u, axis=0, kind="stable"), axis=0, kind="stable")
    scores = _vdw_scores(N)[ranks]
    T = np.corrcoef(scores, rowvar=False)
    Q = np.linalg.cholesky(T)
    target = scores @ np.linalg.inv(Q).T
    new_ranks = np.argsort(np.argsort(target, axis=0, kind="stable"), axis=0, kind="stable")
    out = np.empty_like(u)
    for j in range(n):
        out[:, j] = np.sort(u[:, j])[new_ranks[:, j]]
    return out


def lhs(marginals, N: int, stream: np.random.Generator, pairing: str = "random",
        seed=None) -> SampleSet:
    """Latin hypercube of size ``N``.

    Draw order: one permutation per axis (``stream.permuted``), then an
    ``(N, n)`` block of in-cell uniforms.  ``pairing="correlation_reduced"``
    applies :func:`iman_conover` afterwards.
    """
    if pairing not in ("random", "correlation_reduced"):
        raise ValueError(f"unknown pairing {pairing!r}")
    if N < 1 or (N < 2 and pairing == "correlation_reduced"):
        raise ValueError("N too small for the requested pairing")
    n = len(marginals)
    perms = stream.permuted(np.tile(np.arange(N), (n, 1)), axis=1).T
    u = (perms + stream.random((N, n))) / N
    if pairing == "correlation_reduced":
        u = iman_conover(u)
    num, den = _equal_weights(N)
    name = "LHS" if pairing == "random" else "LHS_corr"
    return SampleSet(tuple(marginals), u, to_physical(marginals, u), num, den,
                     np.full(N, -1), None, name, seed, latin_resolution=N)


def bin_counts(u: np.ndarray, resolution: int) -> np.ndarray:
    """Per-axis occupancy of ``resolution`` equal bins, shape ``(n, resolution)``."""
    idx = np.minimum((u * resolution).astype(np.int64), resolution - 1)
    return np.stack([np.bincount(idx[:, j], minlength=resolution) for j in range(u.shape[1])])


def is_latin(u: np.ndarray, resolution: int | None = None, per_bin: int = 1) -> bool:
    """Whether every axis has exactly ``per_bin`` components per bin."""
    u = np.atleast_2d(u)
    resolution = len(u) // per_bin if resolution is None else resolution
    if resolution * per_bin != len(u):
        return False
    return bool(np.all(bin_counts(u, resolution) == per_bin))


def hlhs_extend(sset: SampleSet, t: int, stream: np.random.Generator) -> SampleSet:
    """Hierarchical LHS extension by refinement factor ``t``.

    Every axis bin is cut into ``t + 1`` sub-bins, one of which holds the
    existing component.  One uniform component is drawn in each empty
    sub-bin (an ``(t*N, n)`` block of uniforms), then the new components
    are paired by one permutation per axis.  Output has ``N*(t+1)`` points.
    """
    N, n = sset.u.shape
    if t < 1:
        raise ValueError("refinement factor must be >= 1")
    if not is_latin(sset.u, N):
        raise StructureError("set is not a Latin hypercube")
    fine = N * (t + 1)
    occ = bin_counts(sset.u, fine).astype(bool)
    empty = [np.flatnonzero(~occ[j]) for j in range(n)]
    n_new = t * N
    if any(len(e) != n_new for e in empty):
        raise StructureError("existing components collide at the refined resolution")
    comps = (np.column_stack(empty) + stream.random((n_new, n))) / fine
    perms = stream.permuted(np.tile(np.arange(n_new), (n, 1)), axis=1).T
    new_u = np.take_along_axis(comps, perms, axis=0)
    u = np.vstack([sset.u, new_u])
    x = np.vstack([sset.x, to_physical(sset.marginals, new_u)])
    num, den = _equal_weights(len(u))
    return SampleSet(sset.marginals, u, x, num, den, np.full(len(u), -1), None,
                     "HLHS", sset.seed, latin_resolution=fine)


def rlh_extend(sset: SampleSet, stream: np.random.Generator) -> SampleSet:
    """Append an independent LHS with the original stratification.

    Requires a (replicated) Latin set: every axis bin at the set's Latin
    resolution ``R`` holds the same number of components.  Adds ``R`` points.
    """
    R = sset.latin_resolution or len(sset)
    N = len(sset)
    if N % R or not is_latin(sset.u, R, N // R):
        raise StructureError("set is not a (replicated) Latin hypercube")
    rep = lhs(sset.marginals, R, stream)
    u = np.vstack([sset.u, rep.u])
    x = np.vstack([sset.x, rep.x])
    num, den = _equal_weights(len(u))
    return SampleSet(sset.marginals, u, x, num, den, np.full(len(u), -1), None,
                     "RLH", sset.seed, latin_resolution=R)


@dataclass
class ExtensionLog:
    """What one batch of RSS extensions did, aligned with the new samples.

    ``parent`` is the sample that shared the split stratum (its weight
    halved from ``parent_weight_before``); -1 when the split stratum held
    several samples.
    """

    new: np.ndarray
    parent: np.ndarray
    parent_weight_before: np.ndarray


class RefinedSampler:
    """Mutable refined-stratified-sampling state for fast repeated extension.

    Each extension: pick a stratum of maximal probability (uniform among
    ties), halve it along an edge of maximal length (uniform among ties),
    and draw one sample in the child without samples.  Stream order per
    extension: stratum tie index (only if more than one candidate), then
    dimension tie index (only if more than one candidate), then ``n``
    uniforms for the new location.

    Use :meth:`sample_set` / :meth:`design` for immutable snapshots.
    """

    def __init__(self, sset: SampleSet, stream: np.random.Generator):
        if sset.design is None:
            raise StructureError("set has no stratified design; cannot extend")
        design = sset.design
        self.marginals = sset.marginals
        self.stream = stream
        self.seed = sset.seed
        self.n = design.dimension
        m, N = len(design), len(sset)
        self._lo = np.array(design.lo, dtype=float)
        self._hi = np.array(design.hi, dtype=float)
        self._ids = list(int(i) for i in design.ids)
        self._next_id = design.next_id
        self._pw = [Fraction(int(w), design.weight_den) for w in design.weight_num]
        self._u = np.array(sset.u, dtype=float)
        self._x = np.array(sset.x, dtype=float)
        self._m, self._N = m, N
        row_of = {sid: k for k, sid in enumerate(self._ids)}
        self._members: list[list[int]] = [[] for _ in range(m)]
        for i, sid in enumerate(sset.stratum_id):
            if int(sid) not in row_of:
                raise StructureError(f"sample {i} refers to unknown stratum {sid}")
            self._members[row_of[int(sid)]].append(i)
        if any(not mem for mem in self._members):
            raise StructureError("every stratum needs at least one sample")
        self._buckets: dict[Fraction, list[int]] = {}
        self._heap: list[Fraction] = []
        for k, w in enumerate(self._pw):
            self._push(k, w)

    # bucket bookkeeping: strata grouped by exact probability
    def _push(self, k: int, w: Fraction):
        b = self._buckets.get(w)
        if b is None:
            self._buckets[w] = b = []
            heapq.heappush(self._heap, -w)
        b.append(k)

    def _pop_max(self) -> int:
        while True:
            w = -self._heap[0]
            b = self._buckets[w]
            if b:
                break
            heapq.heappop(self._heap)
            del self._buckets[w]
        j = int(self.stream.integers(len(b))) if len(b) > 1 else 0
        b[j], b[-1] = b[-1], b[j]
        return b.pop()

    def _grow(self, arr: np.ndarray, size: int) -> np.ndarray:
        if size <= len(arr):
            return arr
        new = np.empty((max(size, 2 * len(arr)), arr.shape[1]))
        new[:len(arr)] = arr
        return new

    def __len__(self):
        return self._N

    def _split_once(self):
        """One split; returns (new_sample or -1, parent sample or -1, parent weight)."""
        k = self._pop_max()
        lo, hi = self._lo[k], self._hi[k]
        edges = hi - lo
        cand = np.flatnonzero(edges >= edges.max() * (1 - 1e-12))
        dim = int(cand[self.stream.integers(len(cand))]) if len(cand) > 1 else int(cand[0])
        cut = lo[dim] + 0.5 * edges[dim]
        w = self._pw[k]
        half = w / 2
        members = self._members[k]
        lower = [i for i in members if self._u[i, dim] <= cut]
        upper = [i for i in members if self._u[i, dim] > cut]

        c = self._m
        self._lo = self._grow(self._lo, c + 1)
        self._hi = self._grow(self._hi, c + 1)
        self._lo[c] = lo
        self._hi[c] = self._hi[k]
        self._lo[c, dim] = cut
        self._hi[k, dim] = cut
        self._ids.append(self._next_id)
        self._next_id += 1
        self._pw[k] = half
        self._pw.append(half)
        self._members[k] = lower
        self._members.append(upper)
        self._m += 1
        self._push(k, half)
        self._push(c, half)

        if lower and upper:
            return -1, -1, 0.0
        target = k if not lower else c
        parent = members[0] if len(members) == 1 else -1
        r = self.stream.random(self.n)
        u_new = self._lo[target] + (self._hi[target] - self._lo[target]) * r
        u_new = np.minimum(u_new, _below(self._hi[target]))
        i = self._N
        self._u = self._grow(self._u, i + 1)
        self._x = self._grow(self._x, i + 1)
        self._u[i] = u_new
        self._members[target].append(i)
        self._N += 1
        return i, parent, float(w)

    def extend(self, k_new: int) -> ExtensionLog:
        """Add exactly ``k_new`` samples."""
        new, parent, pw = [], [], []
        while len(new) < k_new:
            i, p, w = self._split_once()
            if i >= 0:
                new.append(i)
                parent.append(p)
                pw.append(w)
        if new:
            idx = np.array(new)
            self._x[idx] = to_physical(self.marginals, self._u[idx])
        return ExtensionLog(np.array(new, dtype=np.int64), np.array(parent, dtype=np.int64),
                            np.array(pw, dtype=float))

    @property
    def u(self) -> np.ndarray:
        return self._u[:self._N]

    @property
    def x(self) -> np.ndarray:
        return self._x[:self._N]

    def stratum_weights(self) -> list[Fraction]:
        return list(self._pw)

    def sample_weights_float(self) -> np.ndarray:
        w = np.empty(self._N)
        for k, mem in enumerate(self._members):
            if mem:
                w[mem] = float(self._pw[k]) / len(mem)
        return w

    def design(self) -> StratifiedDesign:
        nums, den = common_form(self._pw)
        return StratifiedDesign(np.array(self._ids), self._lo[:self._m].copy(),
                                self._hi[:self._m].copy(), nums, den)

    def sample_set(self) -> SampleSet:
        design = self.design()
        sw = [Fraction(0)] * self._N
        sid = np.full(self._N, -1, dtype=np.int64)
        for k, mem in enumerate(self._members):
            for i in mem:
                sw[i] = self._pw[k] / len(mem)
                sid[i] = self._ids[k]
        nums, den = common_form(sw)
        return SampleSet(self.marginals, self.u.copy(), self.x.copy(), nums, den, sid,
                         design, "RSS", self.seed)


def rss_extend(sset: SampleSet, k_new: int, stream: np.random.Generator) -> SampleSet:
    """Refined stratified extension by ``k_new`` samples (see :class:`RefinedSampler`)."""
    eng = RefinedSampler(sset, stream)
    eng.extend(k_new)
    return eng.sample_set()


def initial_stratified(marginals, N0: int, stream: np.random.Generator, seed=None) -> SampleSet:
    """Balanced starting set of size ``N0`` with one sample per stratum.

    Uses the SBSD grid when ``N0`` is a perfect power (``2**(n*p)`` or an
    n-th power), else greedy halving to the largest power of two not above
    ``N0`` followed by RSS extensions up to ``N0``.
    """
    n = len(marginals)
    try:
        divs = grid_divisions(n, N0)
        base = N0
    except ValueError:
        base = 1 << (N0.bit_length() - 1)
        divs = grid_divisions(n, base)
    sset = stratified_sample(marginals, make_grid(divs), 1, stream, seed)
    if N0 > base:
        sset = rss_extend(sset, N0 - base, stream)
    return replace(sset, generator="RSS", seed=seed)


# -- CSV serialization -------------------------------------------------------

def set_to_csv(sset: SampleSet) -> str:
    """CSV with header ``index,u_1..u_n,x_1..x_n,weight_num,weight_log2den,stratum_id``.

    Leading ``#`` lines carry marginals and provenance.
    """
    n = sset.dimension
    buf = io.StringIO()
    buf.write(f"# generator={sset.generator}\n")
    buf.write(f"# seed={'' if sset.seed is None else sset.seed}\n")
    buf.write("# marginals=" + ";".join(format_distribution(m) for m in sset.marginals) + "\n")
    buf.write(f"# latin_resolution={sset.latin_resolution}\n")
    cols = ["index"] + [f"u_{i+1}" for i in range(n)] + [f"x_{i+1}" for i in range(n)]
    cols += ["weight_num", "weight_log2den", "stratum_id"]
    buf.write(",".join(cols) + "\n")
    for i in range(len(sset)):
        num, den = format_weight(sset.weight_num[i], sset.weight_den)
        sid = "" if sset.stratum_id[i] < 0 else str(int(sset.stratum_id[i]))
        fields = [str(i)] + [repr(float(v)) for v in sset.u[i]] + [repr(float(v)) for v in sset.x[i]]
        buf.write(",".join(fields + [num, den, sid]) + "\n")
    return buf.getvalue()


def set_from_csv(text: str, design: StratifiedDesign | None = None) -> SampleSet:
    meta = {}
    rows = []
    header = None
    for ln in text.splitlines():
        if not ln.strip():
            continue
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        elif header is None:
            header = ln.split(",")
        else:
            rows.append(ln.split(","))
    if header is None:
        raise ValueError("missing CSV header")
    n = (len(header) - 4) // 2
    marginals = tuple(parse_distribution(s) for s in meta.get("marginals", "").split(";") if s)
    if len(marginals) != n:
        raise ValueError("marginals metadata missing or inconsistent with columns")
    u = np.array([[float(v) for v in r[1:1 + n]] for r in rows]).reshape(-1, n)
    x = np.array([[float(v) for v in r[1 + n:1 + 2 * n]] for r in rows]).reshape(-1, n)
    w = [parse_weight(r[1 + 2 * n], r[2 + 2 * n]) for r in rows]
    sid = np.array([int(r[3 + 2 * n]) if r[3 + 2 * n].strip() else -1 for r in rows], dtype=np.int64)
    nums, den = common_form(w)
    seed = meta.get("seed") or None
    return SampleSet(marginals, u, x, nums, den, sid, design, meta.get("generator", ""),
                     int(seed) if seed is not None else None,
                     int(meta.get("latin_resolution", 0) or 0))
