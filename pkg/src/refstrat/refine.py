"""Optimal imbalance factor for refining one of two output strata.

The output ``Y`` has a known distribution and is stratified in its own
probability space into ``Omega_1 = [0, 1/2]`` (one sample, left alone) and
``Omega_2 = [1/2, 1]``, which receives one extra sample.  ``Omega_2`` is
either left whole with two samples or split at probability ``1/2 + z/2``
into two children with one sample each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, format_distribution

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RefinementProblem:
    output_dist: Distribution
    fixed_stratum: tuple[float, float] = (0.0, 0.5)
    split_stratum: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        a, b = self.fixed_stratum
        c, d = self.split_stratum
        intervals = sorted([(a, b), (c, d)])
        if not (intervals[0][0] == 0.0 and intervals[0][1] == intervals[1][0]
                and intervals[1][1] == 1.0):
            raise ValueError("strata must partition [0, 1]")

    @property
    def p1(self) -> float:
        return self.fixed_stratum[1] - self.fixed_stratum[0]

    @property
    def p2(self) -> float:
        return self.split_stratum[1] - self.split_stratum[0]

    def stratum_var(self, lo: float, hi: float) -> float:
        return self.output_dist.conditional_moments(lo, hi)[1]


def variance_of_split(problem: RefinementProblem, z: float) -> float:
    """``p1^2 s1^2 + p21^2 s21^2 + p22^2 s22^2`` with ``p21 = z p2``."""
    if not 0.0 < z < 1.0:
        raise ValueError(f"imbalance factor must lie in (0, 1), got {z}")
    lo, hi = problem.split_stratum
    cut = lo + z * (hi - lo)
    p21, p22 = z * problem.p2, (1.0 - z) * problem.p2
    return (problem.p1**2 * problem.stratum_var(*problem.fixed_stratum)
            + p21**2 * problem.stratum_var(lo, cut)
            + p22**2 * problem.stratum_var(cut, hi))


def no_refinement_variance(problem: RefinementProblem) -> float:
    """One sample in ``Omega_1`` and two in the undivided ``Omega_2``."""
    return (problem.p1**2 * problem.stratum_var(*problem.fixed_stratum)
            + problem.p2**2 / 2.0 * problem.stratum_var(*problem.split_stratum))


def two_sample_variance(problem: RefinementProblem) -> float:
    """The starting design: one sample in each of the two strata."""
    return (problem.p1**2 * problem.stratum_var(*problem.fixed_stratum)
            + problem.p2**2 * problem.stratum_var(*problem.split_stratum))


@dataclass(frozen=True)
class OptimumZ:
    z_star: float
    var_star: float
    method: str


def _golden(f, a: float, b: float, tol: float):
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a >= tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    z = 0.5 * (a + b)
    return z, f(z)


def optimize_z(problem: RefinementProblem, tol: float = 1e-4, lo: float = 0.01,
               hi: float = 0.99, check_points: int = 33) -> OptimumZ:
    """Golden-section search for the variance-minimizing imbalance factor.

    A coarse scan of ``check_points`` values guards against non-unimodal
    objectives: if the scan is not unimodal, or its best point lies more
    than one scan step from the golden result, a dense grid of 10^4 points
    is evaluated and polished by golden section around its best cell.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    f = lambda z: variance_of_split(problem, z)
    z, v = _golden(f, lo, hi, tol)
    scan = np.linspace(lo, hi, check_points)
    vals = np.array([f(s) for s in scan])
    j = int(np.argmin(vals))
    unimodal = np.all(np.diff(vals[:j + 1]) <= 0) and np.all(np.diff(vals[j:]) >= 0)
    if unimodal and abs(scan[j] - z) <= scan[1] - scan[0]:
        return OptimumZ(float(z), float(v), "golden")
    grid = np.linspace(lo, hi, 10_000)
    gv = np.array([f(s) for s in grid])
    k = int(np.argmin(gv))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    z, v = _golden(f, a, b, tol)
    return OptimumZ(float(z), float(v), "grid")


def sweep_rows(problem: RefinementProblem, zs) -> list[str]:
    """``dist,z,var`` CSV rows for a curve of the variance against ``z``."""
    name = format_distribution(problem.output_dist)
    return [f'"{name}",{float(z)!r},{variance_of_split(problem, float(z))!r}' for z in zs]


SWEEP_HEADER = "dist,z,var"
