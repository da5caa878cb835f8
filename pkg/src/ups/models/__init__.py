from .data import load_leukemia, load_mammals, load_stackloss, synthetic_logistic
from .linear import LinearCvProblem, LinearModel, LinregGibbsKernel, linreg_gibbs_kernel
from .logistic import (
    LogisticCvProblem,
    laplace_rwmh_config,
    LogisticModel,
    PggKernel,
    laplace_fit,
    log_evidence_is,
    loo_log_predictive_is,
    pgg_kernel,
)
from .rwmh import RwmhConfig, RwmhKernel, rwmh_kernel

__all__ = [
    "LinearCvProblem", "LinearModel", "LogisticCvProblem", "laplace_rwmh_config", "LinregGibbsKernel", "LogisticModel", "PggKernel", "RwmhConfig", "RwmhKernel",
    "laplace_fit", "linreg_gibbs_kernel", "load_leukemia", "load_mammals", "load_stackloss",
    "log_evidence_is", "loo_log_predictive_is", "pgg_kernel", "rwmh_kernel", "synthetic_logistic",
]
