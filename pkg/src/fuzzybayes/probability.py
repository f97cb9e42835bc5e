"""Priors, likelihoods and the joint log-posterior.

Continuous priors expose ``logpdf`` (-inf outside support), ``draw`` and a
``scale_hint`` that random-walk proposals use as a reference length.  The
log-posterior always evaluates the prior first and short-circuits to -inf
without touching the likelihood when a parameter is out of support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class UniformPrior:
    """Flat on (lo, hi]; the open lower end keeps zero half-widths out."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"uniform prior needs lo < hi, got ({self.lo}, {self.hi})")

    def logpdf(self, x: float) -> float:
        if self.lo < x <= self.hi:
            return -np.log(self.hi - self.lo)
        return -np.inf

    def draw(self, rng) -> float:
        return float(rng.uniform(self.lo, self.hi))

    @property
    def scale_hint(self) -> float:
        return self.hi - self.lo

    @property
    def median(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class NormalPrior:
    mu: float
    sd: float

    def __post_init__(self):
        if self.sd <= 0:
            raise ValueError("normal prior needs sd > 0")

    def logpdf(self, x: float) -> float:
        z = (x - self.mu) / self.sd
        return -0.5 * _LOG_2PI - np.log(self.sd) - 0.5 * z * z

    def draw(self, rng) -> float:
        return float(self.mu + self.sd * rng.standard_normal())

    @property
    def scale_hint(self) -> float:
        return 2.0 * self.sd

    @property
    def median(self) -> float:
        return self.mu


@dataclass(frozen=True)
class HalfCauchyPrior:
    """Cauchy(0, scale) truncated to x > 0."""

    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("half-Cauchy prior needs scale > 0")

    def logpdf(self, x: float) -> float:
        if x <= 0:
            return -np.inf
        z = x / self.scale
        return np.log(2.0 / np.pi) - np.log(self.scale) - np.log1p(z * z)

    def draw(self, rng) -> float:
        return float(self.scale * np.abs(rng.standard_cauchy()))

    @property
    def scale_hint(self) -> float:
        return 2.0 * self.scale

    @property
    def median(self) -> float:
        # |Cauchy(0, s)| has median s
        return self.scale


@dataclass(frozen=True)
class BernoulliPrior:
    p_incl: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.p_incl < 1.0:
            raise ValueError("inclusion probability must be strictly inside (0, 1)")

    def logpmf(self, included: bool) -> float:
        return np.log(self.p_incl if included else 1.0 - self.p_incl)


@dataclass(frozen=True)
class PriorSpec:
    """Component priors: one per half-width slot, optional noise scale,
    optional shared rule-inclusion prior."""

    phi: tuple
    sigma: object = None
    beta: object = None

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(self.phi))

    @classmethod
    def for_rule_base(cls, base, sigma=None, beta=None) -> "PriorSpec":
        """Uniform(0, span) on every free half-width of ``base``.

        The upper bound is each variable's own universe span, so an input on
        [0, 10] gets Uniform(0, 10] and an output on [0, 100] gets
        Uniform(0, 100].
        """
        phi = tuple(
            UniformPrior(0.0, var.universe.span)
            for var in base.variables
            if not var.fixed
            for _ in var.labels
        )
        return cls(phi, sigma=sigma, beta=beta)


def log_prior(theta, prior: PriorSpec) -> float:
    """Joint log-density of a parameter vector under its component priors."""
    phi = np.asarray(theta.phi, dtype=float)
    if phi.shape != (len(prior.phi),):
        raise ValueError(f"expected {len(prior.phi)} phi values, got {phi.shape}")
    total = 0.0
    for x, comp in zip(phi, prior.phi):
        lp = comp.logpdf(x)
        if lp == -np.inf:
            return -np.inf
        total += lp
    if prior.sigma is not None:
        if theta.sigma is None:
            raise ValueError("prior has a sigma component but theta.sigma is None")
        lp = prior.sigma.logpdf(theta.sigma)
        if lp == -np.inf:
            return -np.inf
        total += lp
    if prior.beta is not None:
        if theta.beta is None:
            raise ValueError("prior has a beta component but theta.beta is None")
        for b in theta.beta:
            total += prior.beta.logpmf(bool(b))
    return total


@dataclass(frozen=True)
class LikelihoodSpec:
    """Observation model: iid Gaussian noise around the crisp output, or
    Bernoulli with the crisp output (clamped) as success probability."""

    kind: str
    clamp_eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("gaussian", "bernoulli"):
            raise ValueError(f"unknown likelihood kind {self.kind!r}")
        if not 0.0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must be in (0, 0.5)")


def log_likelihood_gaussian(y, preds, sigma: float) -> float:
    """sum_i log N(y_i | preds_i, sigma^2)."""
    if sigma is None or sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = np.asarray(y, dtype=float)
    preds = np.asarray(preds, dtype=float)
    if y.shape != preds.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs preds {preds.shape}")
    n = y.size
    resid = y - preds
    return float(
        -0.5 * n * (_LOG_2PI + 2.0 * np.log(sigma))
        - 0.5 * np.dot(resid, resid) / (sigma * sigma)
    )


def log_likelihood_bernoulli(y, preds, clamp_eps: float = 1e-6) -> float:
    """sum_i log Bern(y_i | clamp(preds_i)); preds clamped to
    [eps, 1 - eps] so boundary outputs stay finite."""
    y = np.asarray(y, dtype=float)
    preds = np.asarray(preds, dtype=float)
    if y.shape != preds.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs preds {preds.shape}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("bernoulli responses must be 0 or 1")
    p = np.clip(preds, clamp_eps, 1.0 - clamp_eps)
    return float(np.sum(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def log_posterior(theta, model) -> float:
    """log prior + log likelihood; -inf (no likelihood call) out of support.

    ``model`` is anything with a ``prior`` attribute and a
    ``log_likelihood(theta)`` method, e.g. FuzzyModel or GlmModel.
    """
    lp = log_prior(theta, model.prior)
    if lp == -np.inf:
        return -np.inf
    return lp + model.log_likelihood(theta)
