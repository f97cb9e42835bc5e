"""Bayesian estimation of fuzzy rule-based systems.

The package fits the free parameters of a Mamdani-style fuzzy rule base
(triangular membership half-widths, optionally a noise scale and per-rule
inclusion flags) by Metropolis-within-Gibbs sampling, and ships the
surrounding toolkit: convergence diagnostics, posterior predictive
simulation, polynomial-regression baselines, synthetic data generators and
a small command line interface.
"""

from .diagnostics import ess, gelman_rubin, geweke, hdi, summarize
from .fuzzy import (
    AND,
    OR,
    LinguisticVariable,
    ParamVector,
    Rule,
    RuleBase,
    TriangularMF,
    Universe,
    bind_params,
    from_json,
    infer,
    infer_batch,
    membership,
    to_json,
)
from .models import (
    FuzzyModel,
    GlmModel,
    bias_study,
    classify,
    fit,
    glm_predict,
    glm_terms,
    mse,
    posterior_predictive,
    predictive_mean,
)
from .sampler import ChainSet, SamplerConfig, load_chains, run_chains, save_chains

__all__ = [
    "AND",
    "OR",
    "ChainSet",
    "FuzzyModel",
    "GlmModel",
    "LinguisticVariable",
    "ParamVector",
    "Rule",
    "RuleBase",
    "SamplerConfig",
    "TriangularMF",
    "Universe",
    "bias_study",
    "bind_params",
    "classify",
    "ess",
    "fit",
    "from_json",
    "gelman_rubin",
    "geweke",
    "glm_predict",
    "glm_terms",
    "hdi",
    "infer",
    "infer_batch",
    "load_chains",
    "membership",
    "mse",
    "posterior_predictive",
    "predictive_mean",
    "run_chains",
    "save_chains",
    "summarize",
    "to_json",
]

__version__ = "0.1.0"
