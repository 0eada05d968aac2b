"""Benchmark models: the cubic test function, additive and multiplicative
functions, and a small two-degree-of-freedom shock demo.

Every model is vectorized: ``evaluate`` maps an ``(N, n)`` array of
physical points to ``N`` responses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .distributions import Distribution, LogNormal, Normal, TruncatedNormal, Uniform


@dataclass(frozen=True)
class ModelSpec:
    """A response function of independent inputs.

    ``truth`` holds exact output moments when known (keys ``mean``,
    ``variance``, ``skewness``, ``kurtosis``).  ``reference`` holds the
    published rounded values for comparison.
    """

    name: str
    marginals: tuple[Distribution, ...]
    evaluator: Callable[[np.ndarray], np.ndarray]
    truth: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dimension:
            raise ValueError(f"{self.name} takes {self.dimension} inputs, got {x.shape[1]}")
        return np.asarray(self.evaluator(x), dtype=float)


# -- cubic function -----------------------------------------------------------

#: lognormal log-scale sigma and uniform upper bound per distribution set
CUBIC_SETS = {
    "A": (0.01, 20), "B": (0.1, 10), "C": (0.1, 7), "D": (0.1, 6), "E": (0.1, 5),
    "F": (0.3, 5), "G": (0.4, 5), "H": (0.45, 5), "I": (0.475, 5), "J": (0.5, 5),
}

#: published rounded moments (mean, variance, skewness, excess kurtosis)
CUBIC_TABLE = {
    "A": (-113.33, 12012.0, -0.77, -0.55),
    "B": (-23.37, 621.18, -0.89, -0.24),
    "C": (-9.32, 121.97, -0.97, -0.09),
    "D": (-5.98, 58.46, -1.01, 0.002),
    "E": (-3.31, 23.65, -1.08, 0.17),
    "F": (-3.10, 25.03, -1.17, 0.81),
    "G": (-2.87, 26.80, -0.99, 2.08),
    "H": (-2.70, 28.85, -0.48, 9.42),
    "I": (-2.60, 30.56, 0.09, 23.84),
    "J": (-2.48, 33.05, 1.08, 60.62),
}

# exponents of (X1, X2, alpha) -> coefficient
_CUBIC_POLY = {(2, 1, 0): 1, (1, 2, 1): -1, (1, 1, 0): 1}


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(i + j for i, j in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def _normal_raw(mu: Fraction, sigma: Fraction, k: int) -> Fraction:
    # E[(mu + sigma Z)^k] with E[Z^j] = (j-1)!! for even j
    tot = Fraction(0)
    for j in range(0, k + 1, 2):
        dfact = math.prod(range(j - 1, 0, -2))
        tot += math.comb(k, j) * mu ** (k - j) * sigma**j * dfact
    return tot


def cubic_moments(sigma_log: float, b: float, kmax: int = 4) -> dict:
    """Exact mean, variance, skewness and excess kurtosis of the cubic model.

    Raw moments of ``Y`` follow from expanding ``Y**k`` into monomials of
    independent inputs.  Uniform and normal moments are exact rationals;
    lognormal moments ``exp(k^2 s^2 / 2)`` enter as the nearest doubles, and
    all further arithmetic is exact.
    """
    s = float(sigma_log)
    ln = lambda k: Fraction(math.exp(0.5 * k * k * s * s))
    B = Fraction(b)
    un = lambda k: B**k / (k + 1)
    nm = lambda k: _normal_raw(Fraction(1), Fraction(1, 10), k)
    raw = []
    p = {(0, 0, 0): 1}
    for _ in range(kmax):
        p = _poly_mul(p, _CUBIC_POLY)
        raw.append(sum(c * ln(a) * un(bb) * nm(cc) for (a, bb, cc), c in p.items()))
    m1, m2, m3, m4 = raw[:4]
    var = m2 - m1**2
    c3 = m3 - 3 * m1 * m2 + 2 * m1**3
    c4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
    return {"mean": float(m1), "variance": float(var),
            "skewness": float(c3) / float(var) ** 1.5,
            "kurtosis": float(c4 / var**2) - 3.0}


def cubic(x: np.ndarray) -> np.ndarray:
    x1, x2, a = x[:, 0], x[:, 1], x[:, 2]
    return x1 * x1 * x2 - a * x1 * x2 * x2 + x1 * x2


def model_cubic(dist_id: str) -> ModelSpec:
    """``Y = X1^2 X2 - alpha X1 X2^2 + X1 X2`` for one of the sets A..J."""
    key = dist_id.strip().upper()
    if key not in CUBIC_SETS:
        raise KeyError(f"unknown distribution set {dist_id!r}; expected one of A..J")
    s, b = CUBIC_SETS[key]
    marg = (LogNormal(0.0, s), Uniform(0.0, float(b)), Normal(1.0, 0.1))
    ref = dict(zip(("mean", "variance", "skewness", "kurtosis"), CUBIC_TABLE[key]))
    return ModelSpec(f"cubic-{key}", marg, cubic, cubic_moments(s, b), ref)


# -- additive / multiplicative -------------------------------------------------

def model_additive(n: int) -> ModelSpec:
    """``Y1 = (2/n) sum X_i`` with ``X_i ~ U(0,1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return ModelSpec(f"additive-{n}", (Uniform(0.0, 1.0),) * n,
                     lambda x: 2.0 * x.sum(axis=1) / x.shape[1],
                     {"mean": 1.0, "variance": 1.0 / (3.0 * n)})


def model_multiplicative(n: int) -> ModelSpec:
    """``Y2 = prod X_i`` with ``X_i ~ U(1 - sqrt 3, 1 + sqrt 3)`` (mean 1, variance 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r3 = math.sqrt(3.0)
    return ModelSpec(f"multiplicative-{n}", (Uniform(1.0 - r3, 1.0 + r3),) * n,
                     lambda x: np.prod(x, axis=1),
                     {"mean": 1.0, "variance": 2.0**n - 1.0})


# -- two-degree-of-freedom demo ------------------------------------------------

@dataclass(frozen=True)
class TwoDofParams:
    """Demo oscillator and forcing constants.

    Mass 1 is loaded by ``F(t) = amplitude * cbrt(W) * exp(-t / decay)`` and
    attached to the ground by spring ``k1``; mass 2 (``5 m1``) hangs on
    mass 1 through ``k2``.  Each spring carries a dashpot
    ``c_i = 2 xi sqrt(k_i m_i)``.  The forcing law is a stand-in chosen for
    this demo, not a physical blast model.
    """

    m1: float = 1.0
    mass_ratio: float = 5.0
    k1: float = 1000.0
    k2: float = 500.0
    amplitude: float = 100.0
    decay: float = 0.01
    duration: float = 1.5
    dt: float = 5e-4


def two_dof_peak_velocity(xi, charge, params: TwoDofParams = TwoDofParams()) -> np.ndarray:
    """Peak ``|v2|`` by fixed-step RK4, vectorized over samples."""
    xi = np.asarray(xi, dtype=float)
    w = np.asarray(charge, dtype=float)
    p = params
    m1, m2 = p.m1, p.mass_ratio * p.m1
    c1 = 2.0 * xi * math.sqrt(p.k1 * m1)
    c2 = 2.0 * xi * math.sqrt(p.k2 * m2)
    amp = p.amplitude * np.cbrt(w)

    def deriv(t, s):
        x1, x2, v1, v2 = s
        f12 = p.k2 * (x2 - x1) + c2 * (v2 - v1)
        a1 = (amp * math.exp(-t / p.decay) - p.k1 * x1 - c1 * v1 + f12) / m1
        a2 = -f12 / m2
        return np.stack([v1, v2, a1, a2])

    s = np.zeros((4,) + np.broadcast(xi, w).shape)
    peak = np.zeros(s.shape[1:])
    h = p.dt
    for i in range(int(round(p.duration / h))):
        t = i * h
        k1 = deriv(t, s)
        k2 = deriv(t + h / 2, s + h / 2 * k1)
        k3 = deriv(t + h / 2, s + h / 2 * k2)
        k4 = deriv(t + h, s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        np.maximum(peak, np.abs(s[3]), out=peak)
    return peak


def model_two_dof_demo(params: TwoDofParams = TwoDofParams()) -> ModelSpec:
    """Inputs: damping ratio ``TN(0.025, 0.01, 0, inf)`` and charge ``N(117, 1.17)``."""
    marg = (TruncatedNormal(0.025, 0.01, 0.0, math.inf), Normal(117.0, 1.17))
    return ModelSpec("twodof", marg, lambda x: two_dof_peak_velocity(x[:, 0], x[:, 1], params))


def get_model(name: str) -> ModelSpec:
    """Look up ``cubic-A``, ``additive-5``, ``multiplicative-3`` or ``twodof``."""
    base, _, arg = name.partition("-")
    if base == "cubic":
        return model_cubic(arg)
    if base == "additive":
        return model_additive(int(arg))
    if base == "multiplicative":
        return model_multiplicative(int(arg))
    if base == "twodof":
        return model_two_dof_demo()
    raise KeyError(f"unknown model {name!r}")
