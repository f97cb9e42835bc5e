"""Convergence and summary diagnostics for MCMC chains.

All functions take plain arrays: a single chain is 1-D, a set of chains is
(n_chains, n_iterations).  ``summarize`` bundles everything per parameter
for a ChainSet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def hdi(samples, mass: float = 0.95):
    """Shortest interval containing ``mass`` of the samples.

    Sorts the draws, slides a window of ceil(mass * n) points and returns
    the narrowest one (leftmost on ties).

    Parameters
    ----------
    samples : array_like
        At least two finite draws.
    mass : float
        Credible mass, strictly inside (0, 1).

    Returns
    -------
    (float, float)
        Lower and upper interval ends.
    """
    if not 0.0 < mass < 1.0:
        raise ValueError(f"mass must be inside (0, 1), got {mass}")
    d = np.sort(np.asarray(samples, dtype=float).ravel())
    n = d.size
    if n < 2:
        raise ValueError("need at least two samples")
    m = int(np.ceil(mass * n))
    if m >= n:
        return float(d[0]), float(d[-1])
    widths = d[m - 1 :] - d[: n - m + 1]
    i = int(np.argmin(widths))  # argmin takes the first minimum: leftmost
    return float(d[i]), float(d[i + m - 1])


def gelman_rubin(chains) -> float:
    """Classical multi-chain potential scale reduction factor (no splitting).

    With m chains of length n, W is the mean within-chain variance, V the
    variance of the chain means, and
    PSRF = sqrt(((n - 1) / n * W + V) / W).
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a (n_chains, n_iterations) array with >= 2 chains")
    if x.shape[1] < 2:
        raise ValueError("chains must have at least 2 iterations")
    n = x.shape[1]
    within = x.var(axis=1, ddof=1).mean()
    between = x.mean(axis=1).var(ddof=1)
    if within == 0.0:
        return 1.0 if between == 0.0 else np.inf
    return float(np.sqrt(((n - 1) / n * within + between) / within))


def autocorrelation(chain, max_lag: int) -> np.ndarray:
    """Normalised autocorrelation rho_0..rho_max_lag (rho_0 == 1).

    Uses the biased estimator rho_t = c_t / c_0 with
    c_t = (1/n) * sum (x_i - xbar)(x_{i+t} - xbar), computed by FFT.
    """
    x = np.asarray(chain, dtype=float).ravel()
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    x = x - x.mean()
    c0 = np.dot(x, x)
    if c0 == 0.0:
        raise ValueError("chain has zero variance")
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f))[: max_lag + 1]
    rho = acov / c0
    rho[0] = 1.0  # exact; the FFT round trip loses an ulp or two
    return rho


def _integrated_time(chain) -> float:
    """Autocorrelation time tau = 1 + 2*sum(rho_t) over the initial positive
    sequence.  A negative lag-1 correlation (no positive run) keeps its
    term, floored at 1/n so the result stays positive and finite."""
    x = np.asarray(chain, dtype=float).ravel()
    n = x.size
    rho = autocorrelation(x, n - 1)
    if rho[1] <= 0.0:
        return max(1.0 + 2.0 * rho[1], 1.0 / n)
    total = 0.0
    for t in range(1, n):
        if rho[t] <= 0.0:
            break
        total += rho[t]
    return 1.0 + 2.0 * total


def ess(chain) -> float:
    """Effective sample size n / tau.

    tau truncates the autocorrelation sum at the first non-positive lag;
    chains with negative lag-1 correlation beat their nominal size.
    """
    x = np.asarray(chain, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two samples")
    return x.size / _integrated_time(x)


def _ar_spectral_zero(x) -> float:
    """Spectral density at frequency zero via a Yule-Walker AR fit.

    Order is chosen by AIC up to 10*log10(n).  On short, strongly
    autocorrelated segments this parametric estimate is much less biased
    than summing empirical autocorrelations, which lose their tail to the
    in-segment mean subtraction.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    x = x - x.mean()
    var0 = float(x @ x) / n
    if var0 == 0.0:
        return 0.0
    max_order = int(min(n - 1, 10.0 * np.log10(n)))
    gamma = np.array([float(x[: n - k] @ x[k:]) / n for k in range(max_order + 1)])
    best_aic = n * np.log(var0) + 2.0
    best_s0 = var0
    # Levinson-Durbin recursion over increasing order
    a = np.zeros(max_order + 1)
    e = gamma[0]
    for p in range(1, max_order + 1):
        acc = gamma[p] - np.dot(a[1:p], gamma[1:p][::-1])
        k = acc / e
        a_new = a.copy()
        a_new[p] = k
        a_new[1:p] = a[1:p] - k * a[1:p][::-1]
        e *= 1.0 - k * k
        a = a_new
        if e <= 0.0:
            break
        aic = n * np.log(e) + 2.0 * (p + 1)
        if aic < best_aic:
            best_aic = aic
            denom = (1.0 - np.sum(a[1 : p + 1])) ** 2
            best_s0 = e / denom if denom > 0.0 else np.inf
    return best_s0


def geweke(chain, first: float = 0.1, last: float = 0.5, n_segments: int = 20) -> np.ndarray:
    """Geweke z-scores: early windows against the fixed last part.

    ``n_segments`` windows of length first * n start evenly spaced between
    the chain start and the final ``last`` fraction, which serves as the
    common reference.  Each z divides the mean difference by the estimated
    standard error of that difference.  Segment standard errors account
    for autocorrelation (the larger of the truncated-autocorrelation and
    AR-spectral estimates, the latter being the less biased one on short
    windows) so stationary correlated chains score approximately standard
    normal.  Exactly constant segments give z = 0.
    """
    x = np.asarray(chain, dtype=float).ravel()
    n = x.size
    if not (0.0 < first < 1.0 and 0.0 < last < 1.0 and first + last <= 1.0):
        raise ValueError("need first, last in (0, 1) with first + last <= 1")
    if n_segments < 1:
        raise ValueError("need at least one segment")
    length = int(first * n)
    i_ref = int(n * (1.0 - last))
    if length < 2 or i_ref + 2 > n:
        raise ValueError(f"chain of length {n} too short for these fractions")

    def seg_stats(seg):
        if np.all(seg == seg[0]):
            return seg[0], 0.0
        long_run_var = max(
            float(np.var(seg)) * _integrated_time(seg), _ar_spectral_zero(seg)
        )
        return seg.mean(), long_run_var / seg.size

    ref_mean, ref_se2 = seg_stats(x[i_ref:])
    starts = np.linspace(0, i_ref - length, n_segments).astype(int)
    z = np.empty(n_segments)
    for k, s in enumerate(starts):
        m, se2 = seg_stats(x[s : s + length])
        denom = se2 + ref_se2
        z[k] = 0.0 if denom == 0.0 else (m - ref_mean) / np.sqrt(denom)
    return z


@dataclass
class ParamSummary:
    name: str
    mean: float
    sd: float
    hdi_lo: float
    hdi_hi: float
    per_chain_hdi: list
    ess: float
    gelman_rubin: float  # None for a single chain
    geweke_z: list

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean": self.mean,
            "sd": self.sd,
            "hdi_lo": self.hdi_lo,
            "hdi_hi": self.hdi_hi,
            "per_chain_hdi": [list(h) for h in self.per_chain_hdi],
            "ess": self.ess,
            "gelman_rubin": self.gelman_rubin,
            "geweke_z": list(self.geweke_z),
        }


@dataclass
class PosteriorSummary:
    params: list
    n_chains: int
    n_kept: int  # post-burn-in draws per chain
    burn_in: int
    mass: float

    def __getitem__(self, name: str) -> ParamSummary:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "n_chains": self.n_chains,
            "n_kept": self.n_kept,
            "burn_in": self.burn_in,
            "mass": self.mass,
            "params": [p.to_dict() for p in self.params],
        }


def summarize(chains, mass: float = 0.95, geweke_segments: int = 20) -> PosteriorSummary:
    """Per-parameter posterior summary of a ChainSet.

    Means and HDIs pool the post-burn-in draws of all chains; HDIs are also
    reported per chain.  ESS sums over chains.  Gelman-Rubin needs at least
    two chains (None otherwise).  Geweke z-scores are concatenated over
    chains.  Parameters a chain never moves (constant draws) get ess = nan.
    """
    kept = chains.post_burn_in()
    n_chains, n_kept, n_params = kept.shape
    params = []
    for j, name in enumerate(chains.param_names):
        cols = kept[:, :, j]
        pooled = cols.ravel()
        per_chain = [hdi(cols[c], mass) for c in range(n_chains)]
        total_ess = 0.0
        for c in range(n_chains):
            try:
                total_ess += ess(cols[c])
            except ValueError:  # constant chain
                total_ess = np.nan
                break
        gr = gelman_rubin(cols) if n_chains >= 2 else None
        zs = np.concatenate([geweke(cols[c], n_segments=geweke_segments)
                             for c in range(n_chains)])
        params.append(
            ParamSummary(
                name=name,
                mean=float(pooled.mean()),
                sd=float(pooled.std(ddof=1)),
                hdi_lo=hdi(pooled, mass)[0],
                hdi_hi=hdi(pooled, mass)[1],
                per_chain_hdi=per_chain,
                ess=float(total_ess),
                gelman_rubin=None if gr is None else float(gr),
                geweke_z=[float(v) for v in zs],
            )
        )
    return PosteriorSummary(params, n_chains, n_kept, chains.burn_in, mass)
