"""Marginal distributions, inverse-transform sampling and random streams.

All distributions are immutable and vectorized: ``cdf``, ``pdf`` and
``inv_cdf`` accept scalars or arrays.  Normal quantiles come from
``scipy.special.ndtri`` which is accurate to machine precision.

Random streams are numpy ``Generator`` objects on the PCG64 bit generator.
A stream is identified by ``(seed, stream_id)``; the pair is fed to
``numpy.random.SeedSequence`` as ``entropy=seed, spawn_key=(stream_id,)``,
so distinct ids give independent substreams and identical ids replay
bit-for-bit on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

#: Probabilities at exactly 0 or 1 are clamped by this much on unbounded
#: supports so the quantile stays finite.
CLAMP_EPS = 1e-15


class ParameterError(ValueError):
    """Invalid distribution parameters."""


def make_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Return the reproducible random stream ``(seed, stream_id)``."""
    if seed < 0 or stream_id < 0:
        raise ValueError("seed and stream_id must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def uniform_draw(stream: np.random.Generator, lo: float, hi: float) -> float:
    """One uniform draw on ``[lo, hi]``; advances ``stream`` by one double."""
    if hi < lo:
        raise ValueError("need lo <= hi")
    return lo + (hi - lo) * stream.random()


class Distribution:
    """Base class for 1-D marginal laws."""

    #: support bounds, possibly infinite
    lower: float = -math.inf
    upper: float = math.inf

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def _ppf(self, u):
        raise NotImplementedError

    def inv_cdf(self, u):
        """Quantile function.

        ``u`` must lie in [0, 1].  On an unbounded side the endpoint is
        clamped by :data:`CLAMP_EPS` before inversion.
        """
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
            raise ValueError("probabilities must lie in [0, 1]")
        lo = 0.0 if math.isfinite(self.lower) else CLAMP_EPS
        hi = 1.0 if math.isfinite(self.upper) else 1.0 - CLAMP_EPS
        out = self._ppf(np.clip(u, lo, hi))
        return out if out.ndim else float(out)

    def mean(self) -> float:
        raise NotImplementedError

    def var(self) -> float:
        raise NotImplementedError

    def conditional_moments(self, lo_p: float, hi_p: float) -> tuple[float, float]:
        """Mean and variance of X given ``inv_cdf(lo_p) <= X <= inv_cdf(hi_p)``.

        Computed by adaptive quadrature on the truncated density, two-pass
        (mean first, then centred second moment) to avoid cancellation.
        """
        if not 0.0 <= lo_p < hi_p <= 1.0:
            raise ValueError(f"need 0 <= lo_p < hi_p <= 1, got [{lo_p}, {hi_p}]")
        a = self.lower if lo_p == 0.0 else float(self._ppf(np.float64(lo_p)))
        b = self.upper if hi_p == 1.0 else float(self._ppf(np.float64(hi_p)))
        mass = hi_p - lo_p
        opts = dict(epsabs=1e-13, epsrel=1e-12, limit=500)
        points = None
        if math.isfinite(a) and math.isfinite(b):
            # help quad find a narrow peak inside a wide window
            mode = self._mode()
            if a < mode < b:
                points = [mode]
        if points:
            m = integrate.quad(lambda t: t * self.pdf(t), a, b, points=points, **opts)[0] / mass
            v = integrate.quad(lambda t: (t - m) ** 2 * self.pdf(t), a, b, points=points, **opts)[0] / mass
        else:
            m = integrate.quad(lambda t: t * self.pdf(t), a, b, **opts)[0] / mass
            v = integrate.quad(lambda t: (t - m) ** 2 * self.pdf(t), a, b, **opts)[0] / mass
        return m, max(v, 0.0)

    def _mode(self) -> float:
        return self.mean()


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > self.a:
            raise ParameterError(f"Uniform needs b > a, got ({self.a}, {self.b})")

    @property
    def lower(self):
        return self.a

    @property
    def upper(self):
        return self.b

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def _ppf(self, u):
        return self.a + (self.b - self.a) * u

    def mean(self):
        return 0.5 * (self.a + self.b)

    def var(self):
        return (self.b - self.a) ** 2 / 12.0

    def conditional_moments(self, lo_p, hi_p):
        if not 0.0 <= lo_p < hi_p <= 1.0:
            raise ValueError(f"need 0 <= lo_p < hi_p <= 1, got [{lo_p}, {hi_p}]")
        width = (hi_p - lo_p) * (self.b - self.a)
        return self.a + 0.5 * (lo_p + hi_p) * (self.b - self.a), width**2 / 12.0


@dataclass(frozen=True)
class Normal(Distribution):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"Normal needs sigma > 0, got {self.sigma}")

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def _ppf(self, u):
        return self.mu + self.sigma * special.ndtri(u)

    def mean(self):
        return self.mu

    def var(self):
        return self.sigma**2


@dataclass(frozen=True)
class LogNormal(Distribution):
    """exp of Normal(mu_log, sigma_log)."""

    mu_log: float = 0.0
    sigma_log: float = 1.0
    lower = 0.0

    def __post_init__(self):
        if not self.sigma_log > 0:
            raise ParameterError(f"LogNormal needs sigma_log > 0, got {self.sigma_log}")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.where(x > 0, x, 0.0)) - self.mu_log) / self.sigma_log
        return np.where(x > 0, special.ndtr(z), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        z = (np.log(safe) - self.mu_log) / self.sigma_log
        dens = np.exp(-0.5 * z * z) / (safe * self.sigma_log * math.sqrt(2 * math.pi))
        return np.where(x > 0, dens, 0.0)

    def _ppf(self, u):
        return np.exp(self.mu_log + self.sigma_log * special.ndtri(u))

    def raw_moment(self, k: int) -> float:
        return math.exp(k * self.mu_log + 0.5 * k * k * self.sigma_log**2)

    def mean(self):
        return self.raw_moment(1)

    def var(self):
        return self.raw_moment(2) - self.raw_moment(1) ** 2

    def _mode(self):
        return math.exp(self.mu_log - self.sigma_log**2)


@dataclass(frozen=True)
class TruncatedNormal(Distribution):
    """Normal(mu, sigma) restricted to ``[lo, hi]`` (either may be infinite)."""

    mu: float = 0.0
    sigma: float = 1.0
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"TruncatedNormal needs sigma > 0, got {self.sigma}")
        if not self.lo < self.hi:
            raise ParameterError(f"TruncatedNormal needs lo < hi, got ({self.lo}, {self.hi})")
        if self._mass() <= 0.0:
            raise ParameterError("truncation window carries no probability")

    @property
    def lower(self):
        return self.lo

    @property
    def upper(self):
        return self.hi

    def _phi_bounds(self):
        return (special.ndtr((self.lo - self.mu) / self.sigma),
                special.ndtr((self.hi - self.mu) / self.sigma))

    def _mass(self):
        a, b = self._phi_bounds()
        return b - a

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        a, _ = self._phi_bounds()
        return np.clip((special.ndtr((x - self.mu) / self.sigma) - a) / self._mass(), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        dens = np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi) * self._mass())
        return np.where((x >= self.lo) & (x <= self.hi), dens, 0.0)

    def _ppf(self, u):
        a, _ = self._phi_bounds()
        out = self.mu + self.sigma * special.ndtri(a + u * self._mass())
        return np.clip(out, self.lo, self.hi)

    def mean(self):
        al, be = (self.lo - self.mu) / self.sigma, (self.hi - self.mu) / self.sigma
        phi = lambda t: 0.0 if math.isinf(t) else math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        return self.mu + self.sigma * (phi(al) - phi(be)) / self._mass()

    def var(self):
        al, be = (self.lo - self.mu) / self.sigma, (self.hi - self.mu) / self.sigma
        phi = lambda t: 0.0 if math.isinf(t) else math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        tphi = lambda t: 0.0 if math.isinf(t) else t * phi(t)
        z = self._mass()
        r = (phi(al) - phi(be)) / z
        return self.sigma**2 * (1 + (tphi(al) - tphi(be)) / z - r * r)

    def _mode(self):
        return min(max(self.mu, self.lo), self.hi)


def inv_cdf(d: Distribution, u):
    """Functional alias for ``d.inv_cdf(u)``."""
    return d.inv_cdf(u)


def conditional_moments(d: Distribution, lo_p: float, hi_p: float) -> tuple[float, float]:
    """Functional alias for ``d.conditional_moments(lo_p, hi_p)``."""
    return d.conditional_moments(lo_p, hi_p)


def parse_distribution(text: str) -> Distribution:
    """Parse ``U(a,b)``, ``N(mu,sigma)``, ``LN(mu_log,sigma_log)`` or ``TN(mu,sigma,lo,hi)``."""
    text = text.strip().replace(" ", "")
    name, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ParameterError(f"cannot parse distribution {text!r}")
    args = [float(a) for a in rest[:-1].split(",") if a]
    kinds = {"U": Uniform, "N": Normal, "LN": LogNormal, "TN": TruncatedNormal}
    try:
        return kinds[name.upper()](*args)
    except KeyError:
        raise ParameterError(f"unknown distribution kind {name!r}") from None
    except TypeError as exc:
        raise ParameterError(f"bad arguments for {name}: {exc}") from None


def _num(v) -> str:
    # shortest round-tripping text; integral values print without ".0"
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def format_distribution(d: Distribution) -> str:
    if isinstance(d, Uniform):
        params, kind = (d.a, d.b), "U"
    elif isinstance(d, Normal):
        params, kind = (d.mu, d.sigma), "N"
    elif isinstance(d, LogNormal):
        params, kind = (d.mu_log, d.sigma_log), "LN"
    elif isinstance(d, TruncatedNormal):
        params, kind = (d.mu, d.sigma, d.lo, d.hi), "TN"
    else:
        raise TypeError(type(d))
    return f"{kind}({','.join(_num(v) for v in params)})"
