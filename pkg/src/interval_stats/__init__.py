"""Frequentist and Bayesian inference for multivariate interval-valued data."""

from .distributions import (
    RngStream, WishartParams, inverse_wishart_logpdf, inverse_wishart_sample,
    multigamma_log, mvn_logpdf, mvn_sample, mvt_logpdf, wishart_logpdf, wishart_sample,
)
from .estimation import (
    FisherInfo, ModelParams, ParamEstimate, SufficientStats, asymptotic_ci,
    bayes_estimate, bivariate_ml, boxcox, fisher_information, gibbs_lambda, gibbs_mu,
    gibbs_sigma, log_likelihood_L1, log_likelihood_L2, ml_estimate, power_transform,
    sufficient_stats,
)
from .exceptions import (
    DataError, DomainError, EstimationError, NotPositiveDefiniteError, NumericalError,
)
from .gof import GofResult, chisq_two_sample, gof_wishart, gof_wishart_bootstrap, mardia_test
from .intervals import (
    Interval, IntervalDataset, IntervalObservation, InternalRep, describe_cov,
    describe_mean_var, internal_mean, internal_spread, load_bundled, parse_dataset,
    read_dataset,
)
from .loss import RiskReport, entropy_loss, l2_loss, mc_risk, risk_gap_closed_form
from .simulation import (
    SimulationConfig, SimulationReport, emit_table, run_scenario, scenario_preset,
)

__version__ = "0.1.0"
