"""Unbiased path sampling: unbiased estimators of log(Z1/Z0) and of the
Bayesian cross-validation objective from coupled Markov chains."""
__version__ = "0.1.0"

from .backend import NATIVE
from .coupling import CoupledDraw, MultivariateNormal, Uniform, maximal_coupling, reflection_maximal_normal
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateProposalError,
    NoMeetingError,
    NumericDomainError,
    NumericError,
    UpsError,
)
from .estimators import (
    AggregateSummary,
    DataSplit,
    UpsEstimate,
    aggregate,
    cv_estimate,
    fixed_tuning,
    mse_cv_estimate,
    replicate_rng,
    sample_split,
    ups_estimate,
)
from .paths import (
    CvTemperingPath,
    DoubleWellPath,
    GeometricPath,
    LogisticPath,
    NormalTranslationPath,
    cv_covariate_path,
    cv_tempering_path,
    doublewell_path,
    geometric,
    laplace_anchored_path,
    logistic_covariate_path,
    logistic_cv_tempering_path,
    normal_translation_path,
)
from .polyagamma import pg_density, pg_log_density, pg_mean, pg_sample
from .tuning import (
    LambdaGrid,
    LambdaProposal,
    TuningReport,
    build_proposal,
    choose_k,
    choose_m,
    estimate_m2,
    sample_lambda,
    survey_meetings,
    tune,
)
from .unbiased import CoupledRun, EstimatorConfig, cost_of, h_km, meeting_time, run_coupled

__all__ = [
    "NATIVE", "AggregateSummary", "ConfigError", "ConvergenceError", "CoupledDraw", "CoupledRun",
    "CvTemperingPath", "DataSplit", "DegenerateProposalError", "DoubleWellPath", "EstimatorConfig",
    "GeometricPath", "LambdaGrid", "LambdaProposal", "LogisticPath", "MultivariateNormal",
    "NoMeetingError", "NormalTranslationPath", "NumericDomainError", "NumericError", "TuningReport",
    "Uniform", "UpsError", "UpsEstimate", "aggregate", "build_proposal", "choose_k", "choose_m",
    "cost_of", "cv_covariate_path", "cv_estimate", "cv_tempering_path", "doublewell_path",
    "estimate_m2", "fixed_tuning", "geometric", "h_km", "laplace_anchored_path",
    "logistic_covariate_path", "logistic_cv_tempering_path", "maximal_coupling", "meeting_time",
    "mse_cv_estimate", "normal_translation_path", "pg_density", "pg_log_density", "pg_mean",
    "pg_sample", "reflection_maximal_normal", "replicate_rng", "run_coupled", "sample_lambda",
    "sample_split", "survey_meetings", "tune", "ups_estimate",
]
