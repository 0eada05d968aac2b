"""Space-filling and orthogonality diagnostics for point sets in [0,1]^n."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

METRIC_HEADER = "generator,N,n,seed,v_metric,wd2,max_rho,cond"


@dataclass(frozen=True)
class VoronoiEstimate:
    """Monte Carlo Voronoi cell volumes.

    ``counts`` are probe hits per point so ``volumes = counts / n_probe``
    sum to one exactly in integer arithmetic.
    """

    counts: np.ndarray
    n_probe: int
    v_metric: float

    @property
    def cell_volumes(self) -> np.ndarray:
        return self.counts / self.n_probe

    @property
    def min_vol(self) -> float:
        return float(self.cell_volumes.min())

    @property
    def max_vol(self) -> float:
        return float(self.cell_volumes.max())


def nearest_brute(points: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """Index of the nearest point for each probe, lowest index on ties."""
    best = np.full(len(probes), np.inf)
    arg = np.zeros(len(probes), dtype=np.int64)
    for i, p in enumerate(points):
        d = np.sum((probes - p) ** 2, axis=1)
        closer = d < best  # strict, so the earlier index wins ties
        best[closer] = d[closer]
        arg[closer] = i
    return arg


def nearest_tree(points: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """Same contract as :func:`nearest_brute` using a k-d tree.

    Exact ties are resolved by asking for the two nearest candidates and
    keeping the lower index when their squared distances agree.
    """
    tree = cKDTree(points)
    k = min(2, len(points))
    _, idx = tree.query(probes, k=k)
    if k == 1:
        return np.asarray(idx, dtype=np.int64)
    d0 = np.sum((probes - points[idx[:, 0]]) ** 2, axis=1)
    d1 = np.sum((probes - points[idx[:, 1]]) ** 2, axis=1)
    tie = (d0 == d1) & (idx[:, 1] < idx[:, 0])
    return np.where(tie, idx[:, 1], idx[:, 0]).astype(np.int64)


def voronoi_volumes(points, n_probe: int = 100_000, stream=None, chunk: int = 50_000,
                    method: str | None = None) -> VoronoiEstimate:
    """Estimate Voronoi cell volumes by nearest-point assignment of probes.

    Probes are uniform on the unit cube, drawn ``chunk`` rows at a time.
    ``method`` is ``"brute"`` or ``"tree"``; by default brute force is used
    for ``n <= 3`` and a k-d tree above.  The V-metric is the coefficient of
    variation (sample standard deviation over mean) of the volumes.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N, n = pts.shape
    if stream is None:
        raise ValueError("a random stream is required")
    if N == 1:
        warnings.warn("single point: volume 1, V-metric 0", RuntimeWarning, stacklevel=2)
        return VoronoiEstimate(np.array([n_probe]), n_probe, 0.0)
    method = method or ("brute" if n <= 3 else "tree")
    assign = nearest_brute if method == "brute" else nearest_tree
    counts = np.zeros(N, dtype=np.int64)
    for start in range(0, n_probe, chunk):
        m = min(chunk, n_probe - start)
        probes = stream.random((m, n))
        counts += np.bincount(assign(pts, probes), minlength=N)
    vols = counts / n_probe
    return VoronoiEstimate(counts, n_probe, float(vols.std(ddof=1) / vols.mean()))


def wd2(points) -> float:
    """Wrap-around L2 discrepancy (Hickernell closed form)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N, n = pts.shape
    if N == 0:
        raise ValueError("empty point set")
    acc = 0.0
    # row blocks keep memory at O(block * N)
    block = max(1, 2_000_000 // max(N * n, 1))
    for start in range(0, N, block):
        d = np.abs(pts[start:start + block, None, :] - pts[None, :, :])
        acc += np.prod(1.5 - d * (1.0 - d), axis=2).sum()
    sq = -(4.0 / 3.0) ** n + acc / N**2
    return math.sqrt(max(sq, 0.0))


@dataclass(frozen=True)
class CorrelationStats:
    corr: np.ndarray
    max_rho: float


def correlation_stats(points) -> CorrelationStats:
    """Pearson correlations of all coordinate pairs and the largest ``|rho|``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N, n = pts.shape
    if N < 3 or n < 2:
        raise ValueError("need N >= 3 points in n >= 2 dimensions")
    if np.any(pts.std(axis=0) == 0):
        raise ValueError("zero-variance coordinate")
    c = np.corrcoef(pts, rowvar=False)
    off = np.abs(c[~np.eye(n, dtype=bool)])
    return CorrelationStats(c, float(off.max()))


def condition_number(points) -> float:
    """``lambda_max / lambda_min`` of ``X^T X`` with ``X = 2u - 1``.

    Rank-deficient matrices give ``inf``.
    """
    X = 2.0 * np.atleast_2d(np.asarray(points, dtype=float)) - 1.0
    N, n = X.shape
    if N <= n and n > 1:
        return math.inf
    ev = np.linalg.eigvalsh(X.T @ X)
    if ev[0] <= ev[-1] * 1e-14:
        return math.inf
    return float(ev[-1] / ev[0])


def metric_row(generator: str, points, seed: int, stream, n_probe: int = 100_000,
               with_voronoi: bool = True) -> str:
    """One CSV row in :data:`METRIC_HEADER` order."""
    pts = np.atleast_2d(points)
    N, n = pts.shape
    v = voronoi_volumes(pts, n_probe, stream).v_metric if with_voronoi else math.nan
    rho = correlation_stats(pts).max_rho if n >= 2 else math.nan
    vals = [v, wd2(pts), rho, condition_number(pts)]
    return ",".join([generator, str(N), str(n), str(seed)] + ["" if math.isnan(x) else repr(x) for x in vals])
