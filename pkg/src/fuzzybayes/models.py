"""Model bundles tying rule bases (or polynomial designs) to data and priors.

Both model kinds speak the sampler's protocol: a flat parameter layout of
continuous values (half-widths or coefficients, then an optional noise
scale) followed by optional binary inclusion flags, plus split
predict/likelihood methods so noise-scale updates can reuse cached
predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import datagen
from .fuzzy import CompiledRuleBase, ParamVector, RuleBase, bind_params
from .probability import (
    BernoulliPrior,
    HalfCauchyPrior,
    LikelihoodSpec,
    NormalPrior,
    PriorSpec,
    UniformPrior,
    log_likelihood_bernoulli,
    log_likelihood_gaussian,
    log_prior,
)
from .sampler import ChainSet, SamplerConfig, run_chains


class _BayesModel:
    """Shared sampler-protocol plumbing; subclasses set the layout fields."""

    # subclasses define: prior, param_names, _n_phi, _sigma_sampled,
    # n_binary, predict_responses, loglik_from_responses

    @property
    def n_continuous(self) -> int:
        return self._n_phi + (1 if self._sigma_sampled else 0)

    @property
    def sigma_index(self):
        return self._n_phi if self._sigma_sampled else None

    def log_prior(self, theta: ParamVector) -> float:
        return log_prior(theta, self.prior)

    def log_likelihood(self, theta: ParamVector) -> float:
        return self.loglik_from_responses(self.predict_responses(theta), theta)

    def initial_state(self, rng, strategy: str = "median") -> ParamVector:
        # random-walk chains on sharply peaked posteriors cannot climb out
        # of a bad starting basin, so the default start is the prior median
        # rather than a random draw
        if strategy == "median":
            phi = np.array([comp.median for comp in self.prior.phi])
            sigma = self.prior.sigma.median if self._sigma_sampled else None
        elif strategy == "prior":
            phi = np.array([comp.draw(rng) for comp in self.prior.phi])
            sigma = self.prior.sigma.draw(rng) if self._sigma_sampled else None
        else:
            raise ValueError(f"unknown init strategy {strategy!r}")
        beta = np.ones(self.n_binary, dtype=bool) if self.n_binary else None
        return ParamVector(phi, sigma, beta)

    def prior_scale_hints(self) -> np.ndarray:
        hints = [comp.scale_hint for comp in self.prior.phi]
        if self._sigma_sampled:
            hints.append(self.prior.sigma.scale_hint)
        return np.asarray(hints, dtype=float)

    def param_vector_from_flat(self, row) -> ParamVector:
        row = np.asarray(row, dtype=float)
        if row.shape != (self.n_continuous + self.n_binary,):
            raise ValueError(
                f"expected {self.n_continuous + self.n_binary} values, got {row.shape}"
            )
        phi = row[: self._n_phi]
        sigma = float(row[self._n_phi]) if self._sigma_sampled else None
        beta = row[self.n_continuous :].astype(bool) if self.n_binary else None
        return ParamVector(phi, sigma, beta)


class FuzzyModel(_BayesModel):
    """Posterior over a rule base's half-widths (and optionally the noise
    scale and per-rule inclusion flags) given a dataset.

    Parameters
    ----------
    rule_base : RuleBase
        Structure to fit; its current triangles are ignored for free
        variables, only anchors and label counts matter.
    data : Dataset
        Inputs must match the base's input count.
    likelihood : LikelihoodSpec
    sigma_fixed, sigma_prior
        Exactly one for Gaussian likelihoods; both None for Bernoulli.
    select_rules : bool
        Adds one Bernoulli(p_incl) inclusion flag per rule.
    n_dummy_params : int
        Inert Uniform(0, 10) parameters appended for scaling benchmarks.
    require_coverage : bool
        Treat any parameter vector that leaves some training point with an
        all-zero aggregated shape as impossible (likelihood -inf) instead of
        silently predicting the midpoint there.  Without this a sparse rule
        base can explain points falling between its membership functions
        with the fallback constant rather than stretching the functions to
        reach them.  Applies to the training data only; predictions at new
        points always use the midpoint fallback.
    """

    def __init__(self, rule_base: RuleBase, data, likelihood=None,
                 sigma_fixed=None, sigma_prior=None, select_rules=False,
                 p_incl=0.5, grid_points=1001, n_dummy_params=0,
                 require_coverage=False):
        self.rule_base = rule_base
        self.data = data
        self.likelihood = likelihood or LikelihoodSpec("gaussian")
        self.sigma_fixed = sigma_fixed
        self.select_rules = bool(select_rules)
        self.grid_points = grid_points
        self.n_dummy_params = int(n_dummy_params)
        self.require_coverage = bool(require_coverage)

        X = np.asarray(data.X, dtype=float)
        y = np.asarray(data.y, dtype=float)
        if X.ndim != 2 or X.shape[1] != rule_base.n_inputs:
            raise ValueError(
                f"data has {X.shape[1] if X.ndim == 2 else '?'} inputs, "
                f"rule base expects {rule_base.n_inputs}"
            )
        if self.likelihood.kind == "bernoulli":
            if sigma_fixed is not None or sigma_prior is not None:
                raise ValueError("bernoulli likelihood takes no noise scale")
            if not np.all((y == 0.0) | (y == 1.0)):
                raise ValueError("bernoulli responses must be 0 or 1")
        else:
            if (sigma_fixed is None) == (sigma_prior is None):
                raise ValueError("give exactly one of sigma_fixed, sigma_prior")
            if sigma_fixed is not None and sigma_fixed <= 0:
                raise ValueError("sigma_fixed must be positive")
        self._X = X
        self._y = y

        self._compiled = CompiledRuleBase(rule_base, grid_points)
        self._n_free = rule_base.free_param_count
        self._n_phi = self._n_free + self.n_dummy_params
        self._sigma_sampled = sigma_prior is not None
        self.n_binary = rule_base.n_rules if self.select_rules else 0

        phi_priors = tuple(PriorSpec.for_rule_base(rule_base).phi) + tuple(
            UniformPrior(0.0, 10.0) for _ in range(self.n_dummy_params)
        )
        self.prior = PriorSpec(
            phi_priors,
            sigma=sigma_prior,
            beta=BernoulliPrior(p_incl) if self.select_rules else None,
        )

        names = rule_base.param_names()
        names += [f"dummy{i}" for i in range(self.n_dummy_params)]
        if self._sigma_sampled:
            names.append("sigma")
        if self.select_rules:
            names += [f"rule{k + 1}.included" for k in range(rule_base.n_rules)]
        self.param_names = names

    @classmethod
    def from_preset(cls, preset, data=None, seed=None) -> "FuzzyModel":
        """Build the fitting model (and data, unless given) for a preset."""
        if isinstance(preset, str):
            preset = datagen.get_preset(preset)
        if data is None:
            data, _ = datagen.generate(preset, seed=seed)
        sigma_prior = None
        if preset.sigma_prior is not None:
            kind, lo, hi = preset.sigma_prior
            if kind != "uniform":
                raise ValueError(f"unsupported sigma prior {kind!r}")
            sigma_prior = UniformPrior(lo, hi)
        return cls(
            preset.rule_base,
            data,
            likelihood=LikelihoodSpec(preset.likelihood),
            sigma_fixed=preset.sigma_fixed,
            sigma_prior=sigma_prior,
            select_rules=preset.select_rules,
            require_coverage=preset.require_coverage,
        )

    def predict_responses(self, theta: ParamVector, X=None) -> np.ndarray:
        on_train = X is None
        X = self._X if on_train else np.asarray(X, dtype=float)
        fallback = np.nan if (on_train and self.require_coverage) else None
        included = None
        if theta.beta is not None:
            included = np.asarray(theta.beta, dtype=bool)
            if not included.any():
                # zero aggregate everywhere: the documented fallback output
                fill = self._compiled.midpoint if fallback is None else fallback
                return np.full(X.shape[0], fill)
        return self._compiled.evaluate(
            X, phi=theta.phi[: self._n_free], included=included, fallback=fallback
        )

    def loglik_from_responses(self, preds, theta: ParamVector) -> float:
        if self.require_coverage and np.isnan(preds).any():
            return -np.inf
        if self.likelihood.kind == "bernoulli":
            return log_likelihood_bernoulli(self._y, preds, self.likelihood.clamp_eps)
        sigma = theta.sigma if self._sigma_sampled else self.sigma_fixed
        return log_likelihood_gaussian(self._y, preds, sigma)

    def bound_base(self, theta: ParamVector) -> RuleBase:
        """Rule base with this parameter vector's widths and flags applied."""
        return bind_params(
            self.rule_base,
            ParamVector(theta.phi[: self._n_free], theta.sigma, theta.beta),
        )


# ---------------------------------------------------------------------------
# polynomial baselines


def glm_terms(model_id: int):
    """Monomial terms of the numbered baseline regressions.

    Terms are tuples of input indices with multiplicity; () is the
    intercept.  Models 1-4 act on two inputs (intercept, linear, product
    and squared terms in increasing richness); models 5-7 act on three
    inputs with no intercept (linear; + pairwise products; + triple
    product).
    """
    table = {
        1: ((), (0,), (1,)),
        2: ((), (0, 1)),
        3: ((), (0, 0), (1, 1), (0, 1)),
        4: ((), (0,), (1,), (0, 0), (1, 1), (0, 1)),
        5: ((0,), (1,), (2,)),
        6: ((0,), (1,), (2,), (0, 1), (0, 2), (1, 2)),
        7: ((0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)),
    }
    if model_id not in table:
        raise ValueError(f"glm id must be 1..7, got {model_id}")
    return table[model_id]


def _term_name(term, columns) -> str:
    if not term:
        return "const"
    parts = []
    for idx in sorted(set(term)):
        p = term.count(idx)
        parts.append(columns[idx] if p == 1 else f"{columns[idx]}^{p}")
    return "*".join(parts)


def design_matrix(terms, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    cols = []
    for term in terms:
        col = np.ones(X.shape[0])
        for idx in term:
            col = col * X[:, idx]
        cols.append(col)
    return np.column_stack(cols)


class GlmModel(_BayesModel):
    """Linear-in-coefficients polynomial regression with identity link.

    Coefficients get independent Normal(0, 20) priors; the noise scale a
    half-Cauchy(10) prior unless fixed.  Fit with the same
    Metropolis-within-Gibbs sampler as the fuzzy models.
    """

    def __init__(self, terms, data, alpha_prior=None, sigma_fixed=None,
                 sigma_prior=None):
        self.terms = tuple(tuple(t) for t in terms)
        self.data = data
        X = np.asarray(data.X, dtype=float)
        self._y = np.asarray(data.y, dtype=float)
        needed = max((idx for t in self.terms for idx in t), default=-1)
        if needed >= X.shape[1]:
            raise ValueError(
                f"terms reference input {needed}, data has {X.shape[1]} columns"
            )
        self._D = design_matrix(self.terms, X)
        self.likelihood = LikelihoodSpec("gaussian")
        self.sigma_fixed = sigma_fixed
        if sigma_fixed is None and sigma_prior is None:
            sigma_prior = HalfCauchyPrior(10.0)
        if (sigma_fixed is None) == (sigma_prior is None):
            raise ValueError("give exactly one of sigma_fixed, sigma_prior")

        alpha_prior = alpha_prior or NormalPrior(0.0, 20.0)
        self._n_phi = len(self.terms)
        self._sigma_sampled = sigma_prior is not None
        self.n_binary = 0
        self.prior = PriorSpec(
            tuple(alpha_prior for _ in self.terms), sigma=sigma_prior
        )
        cols = data.column_names
        self.param_names = [_term_name(t, cols) for t in self.terms]
        if self._sigma_sampled:
            self.param_names.append("sigma")

    @classmethod
    def numbered(cls, model_id: int, data, **kwargs) -> "GlmModel":
        return cls(glm_terms(model_id), data, **kwargs)

    def predict_responses(self, theta: ParamVector, X=None) -> np.ndarray:
        D = self._D if X is None else design_matrix(self.terms, X)
        return D @ np.asarray(theta.phi, dtype=float)

    def loglik_from_responses(self, preds, theta: ParamVector) -> float:
        sigma = theta.sigma if self._sigma_sampled else self.sigma_fixed
        return log_likelihood_gaussian(self._y, preds, sigma)


def glm_predict(terms, alpha, X) -> np.ndarray:
    """Deterministic mean response of a polynomial model."""
    alpha = np.asarray(alpha, dtype=float)
    D = design_matrix(terms, X)
    if D.shape[1] != alpha.size:
        raise ValueError(f"{D.shape[1]} terms but {alpha.size} coefficients")
    return D @ alpha


# ---------------------------------------------------------------------------
# fitting and prediction


def fit(model, config: SamplerConfig = None, init: ParamVector = None) -> ChainSet:
    """Sample the model's posterior; defaults to the standard run shape
    (10,000 iterations, 2,000 burn-in, 3 chains)."""
    return run_chains(config or SamplerConfig(), model, init=init)


def posterior_predictive(chains: ChainSet, model, X_new, seed: int = 0) -> np.ndarray:
    """Posterior predictive draws at new inputs, one row per retained draw.

    Gaussian models add observation noise at each draw's own noise scale
    (the fixed one when sigma is not sampled); Bernoulli models return the
    clamped success probabilities.
    """
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    rows = chains.pooled()
    rng = np.random.default_rng(seed)
    out = np.empty((rows.shape[0], X_new.shape[0]))
    bernoulli = model.likelihood.kind == "bernoulli"
    eps = model.likelihood.clamp_eps
    for d, row in enumerate(rows):
        theta = model.param_vector_from_flat(row)
        preds = model.predict_responses(theta, X=X_new)
        if bernoulli:
            out[d] = np.clip(preds, eps, 1.0 - eps)
        else:
            sigma = theta.sigma if theta.sigma is not None else model.sigma_fixed
            out[d] = preds + sigma * rng.standard_normal(X_new.shape[0])
    return out


def predictive_mean(chains: ChainSet, model, X_new, seed: int = 0) -> np.ndarray:
    return posterior_predictive(chains, model, X_new, seed=seed).mean(axis=0)


def mse(y_pred, y_true) -> float:
    """Mean squared error (1/N) * (y_pred - y)'(y_pred - y)."""
    y_pred = np.asarray(y_pred, dtype=float)
    y_true = np.asarray(y_true, dtype=float)
    if y_pred.shape != y_true.shape:
        raise ValueError(f"shape mismatch: {y_pred.shape} vs {y_true.shape}")
    diff = y_pred - y_true
    return float(diff @ diff / diff.size)


def posterior_mean_params(chains: ChainSet, model) -> ParamVector:
    """Posterior means of the continuous block; inclusion flags by majority."""
    means = chains.pooled().mean(axis=0)
    flat = means.copy()
    if model.n_binary:
        flat[model.n_continuous :] = means[model.n_continuous :] > 0.5
    return model.param_vector_from_flat(flat)


def classify(chains: ChainSet, model, X_new, threshold: float = 0.5) -> np.ndarray:
    """Hard labels from the posterior-mean parameters: 1 where the crisp
    output exceeds the threshold, else 0 (ties go to 0)."""
    if model.likelihood.kind != "bernoulli":
        raise ValueError("classify needs a model with a bernoulli likelihood")
    theta = posterior_mean_params(chains, model)
    preds = model.predict_responses(theta, X=np.atleast_2d(np.asarray(X_new, float)))
    return (preds > threshold).astype(int)


# ---------------------------------------------------------------------------
# calibration (bias) study


def prob_below(draws, truth) -> np.ndarray:
    """Per-column fraction of draws strictly below the truth, ties counted
    half (so a posterior collapsed exactly on the truth scores 0.5)."""
    draws = np.asarray(draws, dtype=float)
    truth = np.asarray(truth, dtype=float)
    return (draws < truth).mean(axis=0) + 0.5 * (draws == truth).mean(axis=0)


def uniformity_test(values, n_bins: int = 10):
    """Chi-squared goodness of fit of values in [0, 1] against uniformity.

    Equal-width bins; returns (bin counts, statistic, p-value) with
    n_bins - 1 degrees of freedom.
    """
    flat = np.asarray(values, dtype=float).ravel()
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    counts, _ = np.histogram(flat, bins=edges)
    expected = flat.size / n_bins
    statistic = float(((counts - expected) ** 2 / expected).sum())
    p_value = float(stats.chi2.sf(statistic, df=n_bins - 1))
    return counts, statistic, p_value


def bias_study(n_replicates: int = 30, preset: str = "case1", seed: int = 7000,
               n_iterations: int = 4000, burn_in: int = 1000, n_chains: int = 1,
               n_bins: int = 10, alpha: float = 0.01) -> dict:
    """Sampler calibration against known ground truth.

    Fits ``n_replicates`` fresh datasets from the preset and records, per
    parameter, the posterior probability mass below the true value (ties
    counted half).  Were the posteriors perfectly calibrated these
    probabilities would look uniform; a chi-squared test over equal-width
    bins quantifies the fit.

    Replicates are drawn from the model actually being fitted: when the
    preset fixes the noise scale, the generator's noise is set to that
    scale.  Without this match (e.g. exactly noiseless data under a tiny
    assumed sigma) every posterior sits symmetrically on the truth and the
    quantiles pile up at 0.5 instead of spreading uniformly.

    Returns a dict with the probability matrix (replicates x parameters),
    bin counts, the chi-squared statistic, its p-value and the verdict.
    """
    pre = datagen.get_preset(preset) if isinstance(preset, str) else preset
    if pre.likelihood == "gaussian" and pre.sigma_fixed is not None:
        pre = replace(pre, noise_sd=float(pre.sigma_fixed))
    probs = []
    for r in range(n_replicates):
        data, truth = datagen.generate(pre, seed=seed + r)
        model = FuzzyModel.from_preset(pre, data=data)
        cfg = SamplerConfig(n_iterations=n_iterations, burn_in=burn_in,
                            n_chains=n_chains, seed=seed + r)
        chains = fit(model, cfg)
        draws = chains.pooled()[:, : truth.phi.size]
        probs.append(prob_below(draws, truth.phi))
    probs = np.asarray(probs)

    counts, statistic, p_value = uniformity_test(probs, n_bins)
    return {
        "probabilities": probs,
        "bin_counts": counts,
        "statistic": statistic,
        "p_value": p_value,
        "alpha": alpha,
        "reject_uniformity": bool(p_value < alpha),
    }
