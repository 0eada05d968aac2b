"""Refined stratified sampling and sample-size extension.

Stratified designs in the unit probability hypercube with exact weights,
SRS/LHS/stratified generators, RSS/HLHS/RLH extensions, weighted
estimators with a weighted bootstrap, space-filling metrics and an optimal
refinement study.
"""

from .distributions import (LogNormal, Normal, TruncatedNormal, Uniform, conditional_moments,
                            inv_cdf, make_stream, parse_distribution, uniform_draw)
from .estimators import (ConvergencePolicy, Statistic, area_metric, check_convergence,
                         modified_bootstrap, stratified_bootstrap, var_ts_oracle, weighted_ecdf,
                         weighted_statistic)
from .metrics import condition_number, correlation_stats, voronoi_volumes, wd2
from .refine import RefinementProblem, no_refinement_variance, optimize_z, variance_of_split
from .samplers import (RefinedSampler, SampleSet, hlhs_extend, initial_stratified, lhs,
                       rlh_extend, rss_extend, srs, stratified_sample)
from .strata import DesignClass, StratifiedDesign, make_sbsd, split_stratum, validate
from .weights import DyadicWeight

__version__ = "0.1.0"
