"""Weighted estimators, empirical CDFs, variance oracles and the bootstrap.

A weighted statistic has the form ``T = sum_l w_l g(y_l)``.  Raw moments
use ``g(y) = y**r`` and CDF values use the indicator ``g(y) = 1{y <= Y}``.
Central and standardized moments are built from the weighted raw moments
(two-pass, about the weighted mean) without small-sample corrections.

The modified bootstrap resamples with selection probabilities equal to the
sample weights.  Weights are exact rationals ``num / D`` over a common
denominator ``D``, so "duplicate record ``l`` exactly ``num_l`` times and
draw uniformly from the ``D`` copies" is carried out by drawing integers in
``[0, D)`` and locating them in the cumulative numerators.  No copy of the
multiset is ever built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .distributions import Distribution
from .weights import MAX_DENOMINATOR, WeightOverflow

#: ``|T|`` below this counts as zero in the CI-width criterion.
CI_FLOOR = 1e-8


class InconsistentSet(ValueError):
    """Weights do not sum to one or do not align with the responses."""


class WindowError(ValueError):
    """Integration window does not cover the step functions' mass."""


# -- statistic kinds ---------------------------------------------------------

@dataclass(frozen=True)
class Statistic:
    """What to estimate.

    ``kind`` is one of ``mean``, ``moment`` (raw, order ``arg``),
    ``central_moment`` (order ``arg``), ``std_moment`` (order ``arg``),
    ``variance``, ``skewness``, ``kurtosis`` (excess) or ``cdf_at``
    (``arg`` is the threshold ``Y``).
    """

    kind: str
    arg: float = 0.0

    def __post_init__(self):
        kinds = ("mean", "moment", "central_moment", "std_moment", "variance",
                 "skewness", "kurtosis", "cdf_at")
        if self.kind not in kinds:
            raise ValueError(f"unknown statistic kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind in ("moment", "central_moment", "std_moment"):
            return f"{self.kind}({int(self.arg)})"
        if self.kind == "cdf_at":
            return f"cdf_at({self.arg!r})"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Statistic":
        """``mean``, ``variance``, ``moment(3)``, ``cdf_at(0.5)`` and so on."""
        text = text.strip()
        name, _, rest = text.partition("(")
        arg = float(rest.rstrip(")")) if rest else 0.0
        return cls(name, arg)


def _as_stat(kind) -> Statistic:
    return kind if isinstance(kind, Statistic) else Statistic.parse(str(kind))


def weighted_moments(y: np.ndarray, w: np.ndarray, kind: Statistic) -> np.ndarray:
    """Evaluate ``kind`` along the last axis; ``y`` and ``w`` broadcast.

    Works row-wise on a ``(B, N)`` block, which is how bootstrap replicates
    are evaluated.
    """
    k, r = kind.kind, int(kind.arg)
    if k == "cdf_at":
        return np.sum(w * (y <= kind.arg), axis=-1)
    mean = np.sum(w * y, axis=-1)
    if k == "mean":
        return mean
    if k == "moment":
        return np.sum(w * y**r, axis=-1)
    d = y - mean[..., None]
    if k == "central_moment":
        return np.sum(w * d**r, axis=-1)
    m2 = np.sum(w * d * d, axis=-1)
    if k == "variance":
        return m2
    order = {"skewness": 3, "kurtosis": 4}.get(k, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sum(w * d**order, axis=-1) / m2 ** (order / 2)
    if k == "kurtosis":
        out = out - 3.0
    # a constant response has no shape; report 0 rather than nan
    return np.where(m2 > 0, out, 0.0)


@dataclass(frozen=True)
class EstimatorResult:
    value: float
    kind: Statistic
    N: int


def _check_weights(sset, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (len(sset),):
        raise InconsistentSet(f"expected {len(sset)} responses, got shape {y.shape}")
    if int(sset.weight_num.sum()) != sset.weight_den:
        raise InconsistentSet(f"weights sum to {sset.weight_sum()}, not 1")
    return y


def weighted_statistic(sset, y, kind="mean") -> EstimatorResult:
    """Weighted estimate of ``kind`` from a sample set and its responses."""
    kind = _as_stat(kind)
    y = _check_weights(sset, y)
    val = float(weighted_moments(y, sset.weights, kind))
    return EstimatorResult(val, kind, len(y))


# -- empirical CDFs and the area metric --------------------------------------

@dataclass(frozen=True)
class StepFunction:
    """Right-continuous CDF with jumps at ``x`` reaching ``level``.

    ``level[i]`` is the value on ``[x[i], x[i+1])``; the value left of
    ``x[0]`` is 0 and ``level[-1]`` is 1.
    """

    x: np.ndarray
    level: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.x, t, side="right")
        padded = np.concatenate([[0.0], self.level])
        return padded[idx]


def weighted_ecdf(sset_or_weights, y) -> StepFunction:
    """Weighted empirical CDF; ties in ``y`` are merged into one jump.

    Accepts a sample set or a plain weight vector.  The final level is set
    to exactly 1 (the exact weights sum to 1).
    """
    if hasattr(sset_or_weights, "weight_num"):
        y = _check_weights(sset_or_weights, y)
        num = sset_or_weights.weight_num
        den = sset_or_weights.weight_den
    else:
        y = np.asarray(y, dtype=float)
        w = np.asarray(sset_or_weights, dtype=float)
        num, den = w, float(w.sum())
    order = np.argsort(y, kind="stable")
    ys = y[order]
    cum = np.cumsum(np.asarray(num)[order])
    keep = np.append(ys[1:] != ys[:-1], True)
    level = cum[keep] / den
    level[-1] = 1.0
    return StepFunction(ys[keep], np.asarray(level, dtype=float))


def default_window(y) -> tuple[float, float]:
    """``[min - 4 IQR, max + 4 IQR]`` of a pooled sample."""
    y = np.asarray(y, dtype=float)
    q1, q3 = np.percentile(y, [25, 75])
    iqr = q3 - q1
    return float(y.min() - 4 * iqr), float(y.max() + 4 * iqr)


def _step_l1(F: StepFunction, G: StepFunction, a: float, b: float) -> float:
    pts = np.unique(np.concatenate([F.x, G.x, [a, b]]))
    pts = pts[(pts >= a) & (pts <= b)]
    if len(pts) < 2:
        return 0.0
    left = pts[:-1]
    return float(np.sum(np.abs(F(left) - G(left)) * np.diff(pts)))


def area_metric(F, G: StepFunction, window: tuple[float, float] | None = None) -> float:
    """L1 distance ``integral |F(y) - G(y)| dy`` over a finite window.

    ``F`` may be a :class:`StepFunction` (exact merge of jump points), a
    :class:`~refstrat.distributions.Distribution` or a plain CDF callable.
    For continuous ``F`` each flat piece of ``G`` is integrated by
    quadrature, split where ``F`` crosses the level of ``G``.

    The default window is ``[min - 4 IQR, max + 4 IQR]`` of the pooled jump
    locations, widened to the ``1e-7`` and ``1 - 1e-7`` quantiles when
    ``F`` is a distribution.
    """
    if window is None:
        pooled = G.x if not isinstance(F, StepFunction) else np.concatenate([F.x, G.x])
        a, b = default_window(pooled)
        if isinstance(F, Distribution):
            a = min(a, float(F.inv_cdf(1e-7)))
            b = max(b, float(F.inv_cdf(1 - 1e-7)))
    else:
        a, b = map(float, window)
    # two step functions differ only between their jumps, so a default window
    # collapsed onto one shared jump is legitimate
    degenerate_ok = window is None and isinstance(F, StepFunction)
    if not (b > a or (degenerate_ok and b == a)):
        raise WindowError(f"empty integration window [{a}, {b}]")
    steps = [G] + ([F] if isinstance(F, StepFunction) else [])
    for s in steps:
        if s.x[0] < a or s.x[-1] > b:
            raise WindowError("window does not cover every jump of the step functions")
    if isinstance(F, StepFunction):
        return _step_l1(F, G, a, b)

    cdf = F.cdf if isinstance(F, Distribution) else F
    pts = np.concatenate([[a], G.x[(G.x > a) & (G.x < b)], [b]])
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        c = float(G(lo))
        f = lambda t: float(cdf(t)) - c
        inner = [lo, hi]
        # F is monotone, so it crosses the level at most once per piece
        if f(lo) < 0 < f(hi):
            inner = [lo, optimize.brentq(f, lo, hi, xtol=1e-14), hi]
        for s, e in zip(inner[:-1], inner[1:]):
            total += integrate.quad(lambda t: abs(f(t)), s, e, epsabs=1e-13, limit=200)[0]
    return total


# -- variance oracles ---------------------------------------------------------

@dataclass(frozen=True)
class OracleVariance:
    """Exact estimator variance of a stratified design.

    ``srs_variance`` and ``between`` are only set for proportional
    allocations ``M_k = N p_k``; then ``variance = srs_variance - between``.
    """

    variance: float
    srs_variance: float | None = None
    between: float | None = None


def var_ts_oracle(design, per_stratum, stratum_means, stratum_vars) -> OracleVariance:
    """Variance of the stratified mean estimator from per-stratum moments.

    ``design`` is a :class:`~refstrat.strata.StratifiedDesign` or a vector
    of stratum probabilities.  Returns ``sum_k p_k**2 / M_k * var_k`` and,
    for proportional allocations, the decomposition into the SRS variance
    at the same ``N`` minus ``(1/N) sum_k p_k (mu_k - tau)**2``.
    """
    p = np.asarray(design.weights_float if hasattr(design, "weights_float") else design,
                   dtype=float)
    M = np.broadcast_to(np.asarray(per_stratum, dtype=float), p.shape)
    mu = np.asarray(stratum_means, dtype=float)
    s2 = np.asarray(stratum_vars, dtype=float)
    if not (mu.shape == s2.shape == p.shape):
        raise ValueError("stratum vectors must match the number of strata")
    var = float(np.sum(p * p / M * s2))
    N = float(M.sum())
    if not np.allclose(M, N * p, rtol=1e-12, atol=0):
        return OracleVariance(var)
    tau = float(np.sum(p * mu))
    between = float(np.sum(p * (mu - tau) ** 2)) / N
    total = float(np.sum(p * (s2 + (mu - tau) ** 2)))
    return OracleVariance(var, total / N, between)


def var_tl_oracle(cell_means, total_var: float) -> float:
    """Variance of the LHS mean estimator by enumerating cell pairs.

    ``cell_means`` has shape ``(N,) * n``: the response mean over each of
    the ``N**n`` equal-probability grid cells.  The result is
    ``total_var / N + (N-1)/N * C`` where ``C`` averages
    ``(mu_p - tau)(mu_q - tau)`` over the ``N**n (N-1)**n`` ordered pairs of
    cells that share no coordinate.  Cost grows like ``N**(2n)``, so this is
    a small-``N`` oracle.
    """
    mu = np.asarray(cell_means, dtype=float)
    n, N = mu.ndim, mu.shape[0]
    if any(s != N for s in mu.shape):
        raise ValueError("cell_means must have shape (N,) * n")
    tau = mu.mean()
    cells = list(np.ndindex(*mu.shape))
    acc = 0.0
    for p in cells:
        for q in cells:
            if all(a != b for a, b in zip(p, q)):
                acc += (mu[p] - tau) * (mu[q] - tau)
    pairs = N**n * (N - 1) ** n
    return total_var / N + (N - 1) / N * acc / pairs


# -- modified bootstrap --------------------------------------------------------

@dataclass(frozen=True)
class BootstrapSummary:
    statistic: Statistic
    point_estimate: float
    ci_lo: float
    ci_hi: float
    replicates: int


def resample_indices(weight_num: np.ndarray, weight_den: int, size, stream) -> np.ndarray:
    """Indices drawn with probabilities ``weight_num / weight_den``, exactly.

    Integers uniform on ``[0, D)`` are located in the cumulative numerators.
    With equal weights ``D = N`` and the result is ``stream.integers(0, N,
    size)`` itself, the classical bootstrap draw.
    """
    num = np.asarray(weight_num, dtype=np.int64)
    D = int(weight_den)
    if D > MAX_DENOMINATOR:
        raise WeightOverflow(f"common denominator {D} exceeds 2**62; coarsen the weights")
    if int(num.sum()) != D:
        raise InconsistentSet("weights do not sum to 1")
    draws = stream.integers(0, D, size=size, dtype=np.int64)
    if D == len(num) and np.all(num == 1):
        return draws
    return np.searchsorted(np.cumsum(num), draws, side="right")


def modified_bootstrap(sset, y, statistic="mean", B: int = 2000, stream=None,
                       chunk: int = 200, alpha: float = 0.05) -> BootstrapSummary:
    """Weighted bootstrap confidence interval for a statistic.

    Each replicate is ``N`` indices from :func:`resample_indices`, given
    equal weights ``1/N``.  Replicates are drawn ``chunk`` at a time as a
    ``(chunk, N)`` block; the bounds are the empirical ``alpha/2`` and
    ``1 - alpha/2`` quantiles of the sorted replicate values.
    """
    if B < 1000:
        raise ValueError("need at least 1000 bootstrap replicates")
    if stream is None:
        raise ValueError("a random stream is required")
    kind = _as_stat(statistic)
    y = _check_weights(sset, y)
    N = len(y)
    point = float(weighted_moments(y, sset.weights, kind))
    reps = np.empty(B)
    w = np.full(N, 1.0 / N)
    for start in range(0, B, chunk):
        m = min(chunk, B - start)
        idx = resample_indices(sset.weight_num, sset.weight_den, (m, N), stream)
        reps[start:start + m] = weighted_moments(y[idx], w, kind)
    reps.sort()
    lo, hi = np.quantile(reps, [alpha / 2, 1 - alpha / 2])
    return BootstrapSummary(kind, point, float(lo), float(hi), B)


def classical_bootstrap(y, statistic="mean", B: int = 2000, stream=None,
                        chunk: int = 200, alpha: float = 0.05) -> BootstrapSummary:
    """Efron's bootstrap with ``stream.integers(0, N)`` draws; reference only."""
    kind = _as_stat(statistic)
    y = np.asarray(y, dtype=float)
    N = len(y)
    w = np.full(N, 1.0 / N)
    reps = np.empty(B)
    for start in range(0, B, chunk):
        m = min(chunk, B - start)
        idx = stream.integers(0, N, size=(m, N), dtype=np.int64)
        reps[start:start + m] = weighted_moments(y[idx], w, kind)
    reps.sort()
    lo, hi = np.quantile(reps, [alpha / 2, 1 - alpha / 2])
    return BootstrapSummary(kind, float(weighted_moments(y, w, kind)), float(lo), float(hi), B)


def stratified_bootstrap(sset, y, statistic="mean", B: int = 2000, stream=None,
                         chunk: int = 200, alpha: float = 0.05) -> BootstrapSummary:
    """Bootstrap that resamples within each stratum and keeps the weights.

    Comparison tool only.  A stratum holding a single sample contributes no
    resampling variability, so one-sample-per-stratum sets give a degenerate
    interval.  Samples without a stratum (id -1) are pooled as one stratum.
    """
    if B < 1000:
        raise ValueError("need at least 1000 bootstrap replicates")
    if stream is None:
        raise ValueError("a random stream is required")
    kind = _as_stat(statistic)
    y = _check_weights(sset, y)
    w = sset.weights
    _, group = np.unique(np.asarray(sset.stratum_id), return_inverse=True)
    order = np.argsort(group, kind="stable")
    counts = np.bincount(group)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pos_start = np.repeat(starts, counts)
    pos_count = np.repeat(counts, counts)
    point = float(weighted_moments(y, w, kind))
    reps = np.empty(B)
    for start in range(0, B, chunk):
        m = min(chunk, B - start)
        # slot j of the sorted layout is refilled from a random member of its stratum
        offs = (stream.random((m, len(y))) * pos_count).astype(np.int64)
        idx = np.empty((m, len(y)), dtype=np.int64)
        idx[:, order] = order[pos_start + offs]
        reps[start:start + m] = weighted_moments(y[idx], w, kind)
    reps.sort()
    lo, hi = np.quantile(reps, [alpha / 2, 1 - alpha / 2])
    return BootstrapSummary(kind, point, float(lo), float(hi), B)


# -- convergence ----------------------------------------------------------------

@dataclass(frozen=True)
class ConvergencePolicy:
    """When to stop an adaptive run.

    ``criterion="analytic"`` stops when ``|T - truth| / |truth| <= threshold``.
    ``criterion="bootstrap"`` stops when the bootstrap CI width relative to
    ``|T|`` is at most ``threshold``.
    """

    criterion: str = "analytic"
    threshold: float = 0.01
    statistic: Statistic = Statistic("variance")
    truth: float | None = None
    batch: int = 1
    replicates: int = 1000

    def __post_init__(self):
        if self.criterion not in ("analytic", "bootstrap"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        object.__setattr__(self, "statistic", _as_stat(self.statistic))


@dataclass(frozen=True)
class ConvergenceCheck:
    converged: bool
    metric: float
    value: float
    ci_lo: float = math.nan
    ci_hi: float = math.nan


def relative_error(value: float, truth: float) -> float:
    if truth == 0:
        raise ValueError("relative error needs a nonzero truth")
    return abs(value - truth) / abs(truth)


def ci_width_metric(value: float, ci_lo: float, ci_hi: float) -> tuple[float, bool]:
    """``|ci_hi - ci_lo| / max(|T|, floor)`` and whether ``|T|`` is usable."""
    usable = abs(value) >= CI_FLOOR
    return abs(ci_hi - ci_lo) / max(abs(value), CI_FLOOR), usable


def check_convergence(policy: ConvergencePolicy, sset, y, stream=None) -> ConvergenceCheck:
    if policy.criterion == "analytic":
        if policy.truth is None:
            raise ValueError("analytic criterion needs the true value")
        val = weighted_statistic(sset, y, policy.statistic).value
        m = relative_error(val, policy.truth)
        return ConvergenceCheck(m <= policy.threshold, m, val)
    bs = modified_bootstrap(sset, y, policy.statistic, policy.replicates, stream)
    m, usable = ci_width_metric(bs.point_estimate, bs.ci_lo, bs.ci_hi)
    return ConvergenceCheck(usable and m <= policy.threshold, m, bs.point_estimate,
                            bs.ci_lo, bs.ci_hi)


RESULT_HEADER = "N,statistic,value,ci_lo,ci_hi,metric,converged"


def result_row(N: int, statistic: Statistic, check: ConvergenceCheck) -> str:
    def fmt(v):
        return "" if isinstance(v, float) and math.isnan(v) else repr(float(v))
    return ",".join([str(N), statistic.label, fmt(check.value), fmt(check.ci_lo),
                     fmt(check.ci_hi), fmt(check.metric), str(int(check.converged))])
