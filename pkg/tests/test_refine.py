import numpy as np
import pytest

from refstrat.distributions import LogNormal, Normal, Uniform, make_stream
from refstrat.refine import (SWEEP_HEADER, RefinementProblem, no_refinement_variance,
                             optimize_z, sweep_rows, two_sample_variance, variance_of_split)

U = RefinementProblem(Uniform(0, 1))
N = RefinementProblem(Normal(0, 1))
LN = RefinementProblem(LogNormal(-1.49, 1.27))


def test_uniform_closed_form():
    # each stratum variance is (width)^2 / 12
    assert two_sample_variance(U) == pytest.approx(2 * 0.25 * 0.25 / 12)
    assert no_refinement_variance(U) == pytest.approx(0.25 / 48 + 0.25 / 2 / 48)
    assert variance_of_split(U, 0.5) == pytest.approx(0.25 / 48 + 2 * (1 / 16) / 192)
    opt = optimize_z(U)
    assert opt.z_star == pytest.approx(0.5, abs=1e-3)


def test_ordering_invariants():
    for prob in (U, N, LN):
        opt = optimize_z(prob)
        assert opt.var_star <= variance_of_split(prob, 0.5) * (1 + 1e-8)
        assert variance_of_split(prob, 0.5) <= no_refinement_variance(prob)
        assert no_refinement_variance(prob) < two_sample_variance(prob)


def test_skewed_output_prefers_unbalanced_split():
    assert optimize_z(N).z_star > 0.55
    assert optimize_z(LN).z_star > optimize_z(N).z_star
    # a bad cut can be worse than not refining at all
    assert variance_of_split(LN, 0.2) > no_refinement_variance(LN)


def test_variance_matches_simulation():
    z = 0.7
    dist = Normal(0, 1)
    stream = make_stream(5)
    R = 40000
    u = np.column_stack([stream.uniform(0, 0.5, R), stream.uniform(0.5, 0.5 + 0.5 * z, R),
                         stream.uniform(0.5 + 0.5 * z, 1.0, R)])
    y = dist.inv_cdf(u)
    est = 0.5 * y[:, 0] + 0.5 * z * y[:, 1] + 0.5 * (1 - z) * y[:, 2]
    assert np.var(est) == pytest.approx(variance_of_split(N, z), rel=0.03)


def test_errors():
    with pytest.raises(ValueError):
        variance_of_split(U, 1.0)
    with pytest.raises(ValueError):
        RefinementProblem(Uniform(0, 1), (0.0, 0.4), (0.5, 1.0))
    with pytest.raises(ValueError):
        optimize_z(U, tol=0)


def test_mirrored_strata():
    flipped = RefinementProblem(Uniform(0, 1), (0.5, 1.0), (0.0, 0.5))
    assert variance_of_split(flipped, 0.3) == pytest.approx(variance_of_split(U, 0.3))


def test_sweep_shape():
    zs = np.linspace(0.05, 0.95, 19)
    rows = sweep_rows(N, zs)
    assert SWEEP_HEADER == "dist,z,var"
    assert len(rows) == 19
    vals = np.array([float(r.rsplit(",", 1)[1]) for r in rows])
    k = int(np.argmin(vals))
    assert np.all(np.diff(vals[:k + 1]) <= 0) and np.all(np.diff(vals[k:]) >= 0)
