"""Adaptive sample-size experiments and metric studies.

An adaptive run starts from ``N0`` samples, checks a convergence policy,
and extends the set until the policy is met or ``max_samples`` is reached.
The sample count at the first passing check is reported.

Two evaluation paths give identical results:

* a fast path for the analytic criterion on power-sum statistics (mean,
  variance, raw moments) with SRS or RSS, which updates weighted power
  sums after every added sample.  An RSS split halves the parent's weight
  ``w`` and gives the new sample ``w/2``, so
  ``S_r += (w/2) (y_new**r - y_parent**r)``;
* a generic path that snapshots the sample set after every batch and calls
  :func:`~refstrat.estimators.check_convergence`.

Streams: replicate ``r`` samples from stream id ``8 r`` and bootstraps
from ``8 r + 1`` of the run seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import make_stream
from .estimators import (ConvergenceCheck, ConvergencePolicy, RESULT_HEADER, Statistic,
                         check_convergence, result_row)
from .metrics import METRIC_HEADER, metric_row
from .models import ModelSpec, get_model
from .samplers import (RefinedSampler, SampleSet, hlhs_extend, initial_stratified, lhs,
                       rlh_extend, srs, stratified_sample)
from .strata import grid_divisions, make_grid

EXTENSIBLE = ("SRS", "RSS", "HLHS", "RLH")
FAST_KINDS = ("mean", "variance", "moment")


class ConfigError(ValueError):
    """Experiment configuration cannot be run."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    generator: str = "RSS"
    N0: int = 20
    policy: ConvergencePolicy = field(default_factory=ConvergencePolicy)
    replicates: int = 100
    seed: int = 0
    max_samples: int = 200_000
    hlhs_t: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.N0 < 1 or self.replicates < 1:
            raise ConfigError("N0 and replicates must be >= 1")
        if self.generator not in EXTENSIBLE:
            raise ConfigError(f"generator {self.generator!r} has no extension; "
                              f"choose one of {', '.join(EXTENSIBLE)}")


@dataclass
class AdaptiveResult:
    """Outcome of one run plus its per-check trace."""

    generator: str
    replicate: int
    N: int
    converged: bool
    trace_N: np.ndarray
    trace_value: np.ndarray
    trace_metric: np.ndarray
    trace_ci: np.ndarray | None = None

    def csv_rows(self, statistic: Statistic, threshold: float) -> list[str]:
        rows = []
        for i in range(len(self.trace_N)):
            lo, hi = (math.nan, math.nan) if self.trace_ci is None else self.trace_ci[i]
            chk = ConvergenceCheck(bool(self.trace_metric[i] <= threshold),
                                   float(self.trace_metric[i]), float(self.trace_value[i]),
                                   float(lo), float(hi))
            rows.append(result_row(int(self.trace_N[i]), statistic, chk))
        return rows


def resolve_policy(policy: ConvergencePolicy, model: ModelSpec) -> ConvergencePolicy:
    """Fill in the truth for the analytic criterion from the model."""
    if policy.criterion != "analytic" or policy.truth is not None:
        return policy
    key = policy.statistic.kind
    if key not in model.truth:
        raise ConfigError(f"model {model.name} has no true {key}; pass a truth value")
    return replace(policy, truth=model.truth[key])


def _fast_ok(policy: ConvergencePolicy, generator: str) -> bool:
    return (policy.criterion == "analytic" and generator in ("SRS", "RSS")
            and policy.statistic.kind in FAST_KINDS)


def _stat_from_sums(kind: Statistic, s1, sr):
    if kind.kind == "mean":
        return s1
    if kind.kind == "variance":
        return sr - s1 * s1
    return sr


def _power(kind: Statistic) -> int:
    return 2 if kind.kind == "variance" else max(int(kind.arg), 1)


def _scan(N_start, s1, sr, kind, policy, N0):
    """Values, metrics and the first passing index over a block of sizes."""
    vals = _stat_from_sums(kind, s1, sr)
    met = np.abs(vals - policy.truth) / abs(policy.truth)
    Ns = N_start + np.arange(len(vals))
    on_batch = (Ns - N0) % policy.batch == 0
    hit = np.flatnonzero(on_batch & (met <= policy.threshold))
    return Ns[on_batch], vals[on_batch], met[on_batch], (int(Ns[hit[0]]) if len(hit) else None)


def _fast_run(config, model, policy, replicate, chunk=256) -> AdaptiveResult:
    stream = make_stream(config.seed, 8 * replicate)
    kind, r = policy.statistic, _power(policy.statistic)
    traces = []
    if config.generator == "SRS":
        sset = srs(model.marginals, config.N0, stream, config.seed)
        y = model.evaluate(sset.x)
        c1, cr = np.cumsum(y), np.cumsum(y**r)
        n_done = len(y)
        # only N0 itself is checked within the initial block
        s1, sr = c1[-1:] / n_done, cr[-1:] / n_done
        out = _scan(n_done, s1, sr, kind, policy, config.N0)
        traces.append(out[:3])
        hit = out[3]
        S1, SR = c1[-1], cr[-1]
        while hit is None and n_done < config.max_samples:
            m = min(chunk, config.max_samples - n_done)
            y = model.evaluate(srs(model.marginals, m, stream).x)
            c1, cr = S1 + np.cumsum(y), SR + np.cumsum(y**r)
            Ns = n_done + 1 + np.arange(m)
            out = _scan(n_done + 1, c1 / Ns, cr / Ns, kind, policy, config.N0)
            traces.append(out[:3])
            hit = out[3]
            S1, SR, n_done = c1[-1], cr[-1], n_done + m
    else:
        sset = initial_stratified(model.marginals, config.N0, stream, config.seed)
        eng = RefinedSampler(sset, stream)
        y = np.empty(config.max_samples + chunk)
        y[:config.N0] = model.evaluate(sset.x)
        w = sset.weights
        S1 = float(w @ y[:config.N0])
        SR = float(w @ y[:config.N0] ** r)
        out = _scan(config.N0, np.array([S1]), np.array([SR]), kind, policy, config.N0)
        traces.append(out[:3])
        hit = out[3]
        n_done = config.N0
        while hit is None and n_done < config.max_samples:
            m = min(chunk, config.max_samples - n_done)
            log = eng.extend(m)
            if np.any(log.parent < 0):
                raise ConfigError("fast path needs one sample per stratum")
            ynew = model.evaluate(eng.x[log.new])
            y[log.new] = ynew
            h = log.parent_weight_before / 2.0
            yp = y[log.parent]
            c1 = S1 + np.cumsum(h * (ynew - yp))
            cr = SR + np.cumsum(h * (ynew**r - yp**r))
            out = _scan(n_done + 1, c1, cr, kind, policy, config.N0)
            traces.append(out[:3])
            hit = out[3]
            S1, SR, n_done = c1[-1], cr[-1], n_done + m
    tN, tv, tm = (np.concatenate(a) for a in zip(*traces))
    if hit is not None:
        keep = tN <= hit
        tN, tv, tm = tN[keep], tv[keep], tm[keep]
    return AdaptiveResult(config.generator, replicate, hit if hit is not None else n_done,
                          hit is not None, tN, tv, tm)


class _Growing:
    """Generic generator state with snapshot and extension."""

    def __init__(self, config, model, stream):
        self.config, self.model, self.stream = config, model, stream
        g = config.generator
        if g == "SRS":
            self.sset = srs(model.marginals, config.N0, stream, config.seed)
        elif g == "RSS":
            self.eng = RefinedSampler(initial_stratified(model.marginals, config.N0, stream,
                                                         config.seed), stream)
        else:
            self.sset = lhs(model.marginals, config.N0, stream, seed=config.seed)
        self.y = model.evaluate(self.snapshot().x)

    def snapshot(self) -> SampleSet:
        return self.eng.sample_set() if self.config.generator == "RSS" else self.sset

    def __len__(self):
        return len(self.eng) if self.config.generator == "RSS" else len(self.sset)

    def extend(self, batch: int):
        g, old = self.config.generator, len(self)
        if g == "RSS":
            log = self.eng.extend(batch)
            self.y = np.concatenate([self.y, self.model.evaluate(self.eng.x[log.new])])
            return
        if g == "SRS":
            add = srs(self.model.marginals, batch, self.stream)
            s = self.sset
            u, x = np.vstack([s.u, add.u]), np.vstack([s.x, add.x])
            self.sset = SampleSet(s.marginals, u, x, np.ones(len(u), dtype=np.int64), len(u),
                                  np.full(len(u), -1), None, "SRS", s.seed)
        elif g == "HLHS":
            self.sset = hlhs_extend(self.sset, self.config.hlhs_t, self.stream)
        else:
            self.sset = rlh_extend(self.sset, self.stream)
        self.y = np.concatenate([self.y, self.model.evaluate(self.sset.x[old:])])


def _generic_run(config, model, policy, replicate) -> AdaptiveResult:
    stream = make_stream(config.seed, 8 * replicate)
    boot = make_stream(config.seed, 8 * replicate + 1)
    state = _Growing(config, model, stream)
    tN, tv, tm, tci = [], [], [], []
    while True:
        chk = check_convergence(policy, state.snapshot(), state.y, boot)
        tN.append(len(state))
        tv.append(chk.value)
        tm.append(chk.metric)
        tci.append((chk.ci_lo, chk.ci_hi))
        if chk.converged or len(state) >= config.max_samples:
            break
        batch = policy.batch if config.generator in ("SRS", "RSS") else 0
        if batch:
            batch = min(batch, config.max_samples - len(state))
        state.extend(batch)
    return AdaptiveResult(config.generator, replicate, tN[-1], chk.converged,
                          np.array(tN), np.array(tv), np.array(tm), np.array(tci))


def run_adaptive(config: ExperimentConfig, replicate: int = 0,
                 fast: bool | None = None) -> AdaptiveResult:
    """One adaptive run; returns the sample count at convergence and the trace.

    HLHS grows by the factor ``t + 1`` and RLH by ``N0`` per step, whatever
    the policy's batch; they report the first admissible size that passes.
    """
    model = get_model(config.model)
    policy = resolve_policy(config.policy, model)
    if fast is None:
        fast = _fast_ok(policy, config.generator)
    if fast:
        if not _fast_ok(policy, config.generator):
            raise ConfigError("fast path needs the analytic criterion, SRS or RSS, "
                              "and a mean, variance or raw-moment statistic")
        return _fast_run(config, model, policy, replicate)
    return _generic_run(config, model, policy, replicate)


def _run_one(args):
    config, rep = args
    return run_adaptive(config, rep)


def run_replicates(config: ExperimentConfig) -> list[AdaptiveResult]:
    """All replicates, in replicate order (a worker pool when ``workers > 1``)."""
    jobs = [(config, r) for r in range(config.replicates)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            return list(ex.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


QUANTILES = (10, 25, 50, 75, 90, 95)


def convergence_quantiles(results: list[AdaptiveResult]) -> np.ndarray:
    """Sample counts by which the given shares of runs had converged.

    Uses the lower empirical quantile so every entry is an observed count.
    """
    Ns = np.array([r.N for r in results])
    return np.percentile(Ns, QUANTILES, method="lower")


def adaptive_csv(results: list[AdaptiveResult], policy: ConvergencePolicy) -> str:
    lines = ["replicate," + RESULT_HEADER]
    for res in sorted(results, key=lambda r: r.replicate):
        lines += [f"{res.replicate},{row}" for row in res.csv_rows(policy.statistic, policy.threshold)]
    return "\n".join(lines) + "\n"


def cubic_study(dists, generators=("SRS", "HLHS", "RSS"), replicates: int = 100,
                seed: int = 0, N0: int = 20, threshold: float = 0.01,
                max_samples: int = 200_000, workers: int = 1) -> list[dict]:
    """Convergence-count quantiles for cubic-model sets and generators."""
    out = []
    pol = ConvergencePolicy("analytic", threshold, Statistic("variance"))
    for d in dists:
        for g in generators:
            cfg = ExperimentConfig(f"cubic-{d}", g, N0, pol, replicates, seed, max_samples,
                                   workers=workers)
            res = run_replicates(cfg)
            q = convergence_quantiles(res)
            out.append({"dist": d, "generator": g, "quantiles": q,
                        "unconverged": sum(not r.converged for r in res)})
    return out


# -- metric and projection studies ---------------------------------------------

def generate(generator: str, marginals, N: int, stream, seed=None) -> SampleSet:
    """A fresh set of size ``N`` from any generator name.

    ``SS``/``SBSS`` use the equal-count grid when ``N`` is a perfect
    ``n``-th power and greedy power-of-two halving otherwise (``N`` must
    then be a power of two).
    """
    g = generator.upper()
    n = len(marginals)
    if g == "SRS":
        return srs(marginals, N, stream, seed)
    if g == "LHS":
        return lhs(marginals, N, stream, "random", seed)
    if g in ("LHS_CORR", "LHS-CORR"):
        return lhs(marginals, N, stream, "correlation_reduced", seed)
    if g in ("SS", "SBSS"):
        return stratified_sample(marginals, make_grid(grid_divisions(n, N)), 1, stream, seed)
    if g == "RSS":
        return initial_stratified(marginals, N, stream, seed)
    raise ConfigError(f"unknown generator {generator!r}")


def run_metric_study(generators, Ns, ns, seeds, n_probe: int = 100_000,
                     with_voronoi: bool = True) -> str:
    """Metric CSV rows for every (generator, N, n, seed) combination.

    The point set uses stream 0 of the seed and the Voronoi probes stream 1.
    """
    from .distributions import Uniform
    lines = [METRIC_HEADER]
    for g in generators:
        for N in Ns:
            for n in ns:
                for s in seeds:
                    pts = generate(g, (Uniform(),) * n, N, make_stream(s, 0), s).u
                    lines.append(metric_row(g, pts, s, make_stream(s, 1), n_probe, with_voronoi))
    return "\n".join(lines) + "\n"


def projective_study(model: ModelSpec, generators=("SRS", "LHS", "SS"), N: int = 1024,
                     replicates: int = 100, seed: int = 0) -> dict:
    """Standard deviation of the mean estimator across replicate sets."""
    out = {}
    for g in generators:
        means = []
        for r in range(replicates):
            sset = generate(g, model.marginals, N, make_stream(seed, r), seed)
            means.append(float(sset.weights @ model.evaluate(sset.x)))
        out[g] = float(np.std(means, ddof=1))
    return out
