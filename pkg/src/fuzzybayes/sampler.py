"""Metropolis-within-Gibbs sampling.

One sweep visits every parameter once in a fixed order (half-widths, then
the noise scale if estimated, then the rule-inclusion flags) and applies a
single-site Metropolis update to each: Gaussian random walk for continuous
parameters, deterministic complement proposal for binary ones.  Proposal
scales start at ``step_fraction`` times each prior's scale hint, adapt
per-parameter toward a target acceptance rate during burn-in only, and
freeze afterwards so the post-burn-in chain is a valid Metropolis chain.

Single-site moves alone mix poorly when the posterior correlates
parameters (on sharply peaked targets the autocorrelation time can reach
hundreds of sweeps), so each iteration also makes ``joint_moves``
full-vector random-walk proposals over the continuous block, shaped by the
empirical covariance accumulated during burn-in and frozen afterwards.
With adaptation off no covariance is learned and the kernel stays purely
single-site.

Models are duck-typed.  The sampler needs::

    param_names          list of names, continuous block first
    n_continuous         number of continuous parameters (phi..., sigma?)
    n_binary             number of inclusion flags (0 if none)
    sigma_index          continuous index whose updates leave predictions
                         unchanged, or None
    initial_state(rng, strategy)
                         starting ParamVector; 'median' puts every
                         continuous parameter at its prior median (the
                         default, mirroring common MCMC test-point
                         initialization), 'prior' draws at random
    log_prior(pv)        -inf outside support
    prior_scale_hints()  reference proposal lengths, one per continuous slot

plus either ``log_likelihood(pv)`` or the split fast path
``predict_responses(pv)`` / ``loglik_from_responses(preds, pv)`` (the split
lets sigma updates reuse cached predictions).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .fuzzy import ParamVector


@dataclass(frozen=True)
class SamplerConfig:
    n_iterations: int = 10_000
    burn_in: int = 2_000
    n_chains: int = 3
    seed: int = 0
    step_fraction: float = 0.025
    adapt: bool = True
    target_accept: float = 0.35
    random_scan: bool = False
    init_strategy: str = "median"
    joint_moves: int = 2

    def __post_init__(self):
        if self.n_iterations <= 0:
            raise ValueError("n_iterations must be positive")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError("burn_in must lie in [0, n_iterations)")
        if self.n_chains < 1:
            raise ValueError("need at least one chain")
        if self.step_fraction <= 0:
            raise ValueError("step_fraction must be positive")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must be inside (0, 1)")
        if self.init_strategy not in ("median", "prior"):
            raise ValueError("init_strategy must be 'median' or 'prior'")
        if self.joint_moves < 0:
            raise ValueError("joint_moves must be non-negative")


@dataclass
class ChainSet:
    """Recorded chains: every iteration of every chain, burn-in included."""

    samples: np.ndarray        # (n_chains, n_iterations, n_params)
    param_names: list
    accept_counts: np.ndarray  # (n_chains, n_params), all iterations
    accept_counts_post: np.ndarray
    burn_in: int
    seed: int
    joint_accepts: np.ndarray = None      # (n_chains,) or None
    joint_proposals: np.ndarray = None
    joint_accepts_post: np.ndarray = None
    joint_proposals_post: np.ndarray = None

    @property
    def n_chains(self) -> int:
        return self.samples.shape[0]

    @property
    def n_iterations(self) -> int:
        return self.samples.shape[1]

    @property
    def n_params(self) -> int:
        return self.samples.shape[2]

    def post_burn_in(self) -> np.ndarray:
        return self.samples[:, self.burn_in :, :]

    def pooled(self) -> np.ndarray:
        """Post-burn-in draws of all chains stacked, (m*(n-burn), n_params)."""
        kept = self.post_burn_in()
        return kept.reshape(-1, kept.shape[2])

    def acceptance_rates(self, post_burn_in: bool = True) -> np.ndarray:
        if post_burn_in:
            span = self.n_iterations - self.burn_in
            return self.accept_counts_post / span
        return self.accept_counts / self.n_iterations

    def joint_acceptance_rates(self, post_burn_in: bool = True):
        """Per-chain acceptance of the joint moves, or None if none ran."""
        acc = self.joint_accepts_post if post_burn_in else self.joint_accepts
        prop = self.joint_proposals_post if post_burn_in else self.joint_proposals
        if acc is None or prop is None or not np.any(prop):
            return None
        return acc / np.maximum(prop, 1)


class _Walker:
    """Per-chain state: current parameters, cached densities, proposal scales."""

    def __init__(self, model, rng, scales=None, target_accept=0.35):
        self.model = model
        self.rng = rng
        self.n_cont = model.n_continuous
        self.n_bin = model.n_binary
        self.sigma_index = getattr(model, "sigma_index", None)
        self.fast = hasattr(model, "predict_responses")
        hints = np.asarray(model.prior_scale_hints(), dtype=float)
        if hints.shape != (self.n_cont,):
            raise ValueError(f"expected {self.n_cont} scale hints, got {hints.shape}")
        self.log_hints = np.log(hints)
        if scales is None:
            scales = 0.025 * hints
        self.log_scales = np.log(np.asarray(scales, dtype=float))
        self.target = target_accept
        self.t = 0
        # joint-move state: covariance accumulators, Cholesky factor, scale
        self.joint_L = None
        self.joint_log_scale = np.log(2.38 / np.sqrt(max(self.n_cont, 1)))
        self.joint_target = 0.25
        self._cov_count = 0
        self._cov_mean = np.zeros(self.n_cont)
        self._cov_m2 = np.zeros((self.n_cont, self.n_cont))

    # -- state management ---------------------------------------------------

    def set_state(self, pv: ParamVector):
        self.phi = np.array(pv.phi, dtype=float)
        self.sigma = pv.sigma
        self.beta = None if pv.beta is None else np.array(pv.beta, dtype=bool)
        self.lp = self.model.log_prior(self.state)
        if self.lp == -np.inf:
            raise ValueError("initial state lies outside the prior support")
        if self.fast:
            self.preds = self.model.predict_responses(self.state)
            self.ll = self.model.loglik_from_responses(self.preds, self.state)
        else:
            self.preds = None
            self.ll = self.model.log_likelihood(self.state)

    @property
    def state(self) -> ParamVector:
        return ParamVector(
            self.phi.copy(),
            self.sigma,
            None if self.beta is None else self.beta.copy(),
        )

    def _flat(self, out):
        k = len(self.phi)
        out[:k] = self.phi
        if self.sigma is not None and self.n_cont == k + 1:
            out[k] = self.sigma
            k += 1
        if self.beta is not None:
            out[k:] = self.beta

    # -- single-site updates ------------------------------------------------

    def _candidate(self, i, value):
        """ParamVector with continuous slot i replaced by value."""
        if i == len(self.phi):  # sigma slot
            return ParamVector(self.phi, value, self.beta), self.sigma
        phi = self.phi.copy()
        old = phi[i]
        phi[i] = value
        return ParamVector(phi, self.sigma, self.beta), old

    def _eval(self, pv, reuse_preds):
        """(log_prior, log_lik, preds); likelihood skipped out of support."""
        lp = self.model.log_prior(pv)
        if lp == -np.inf:
            return lp, None, None
        if self.fast:
            preds = self.preds if reuse_preds else self.model.predict_responses(pv)
            return lp, self.model.loglik_from_responses(preds, pv), preds
        return lp, self.model.log_likelihood(pv), None

    def _accept(self, delta) -> bool:
        return delta >= 0.0 or np.log(self.rng.random()) < delta

    def update_continuous(self, i, adapting) -> bool:
        cur = self.sigma if i == len(self.phi) else self.phi[i]
        prop = cur + self.rng.standard_normal() * np.exp(self.log_scales[i])
        pv, _ = self._candidate(i, prop)
        lp, ll, preds = self._eval(pv, reuse_preds=(i == self.sigma_index))
        accepted = False
        if ll is not None:
            delta = (lp + ll) - (self.lp + self.ll)
            if self._accept(delta):
                accepted = True
                if i == len(self.phi):
                    self.sigma = prop
                else:
                    self.phi[i] = prop
                self.lp, self.ll, self.preds = lp, ll, preds
        if adapting:
            gamma = self.t ** -0.6
            step = gamma * ((1.0 if accepted else 0.0) - self.target)
            self.log_scales[i] = np.clip(
                self.log_scales[i] + step,
                self.log_hints[i] - 30.0,
                self.log_hints[i] + 5.0,
            )
        return accepted

    def _cont_vec(self) -> np.ndarray:
        if self.sigma is not None and self.n_cont == len(self.phi) + 1:
            return np.append(self.phi, self.sigma)
        return self.phi.copy()

    def accumulate_cov(self):
        """Feed the current state into the running covariance estimate."""
        x = self._cont_vec()
        self._cov_count += 1
        d = x - self._cov_mean
        self._cov_mean += d / self._cov_count
        self._cov_m2 += np.outer(d, x - self._cov_mean)

    def refresh_joint(self):
        """Rebuild the joint proposal shape from the accumulated covariance."""
        if self._cov_count <= max(10, self.n_cont):
            return
        cov = self._cov_m2 / (self._cov_count - 1)
        cov = cov + 1e-12 * np.eye(self.n_cont)
        try:
            self.joint_L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            self.joint_L = None

    def update_joint(self, adapting):
        """Full-vector proposal over the continuous block.

        Returns None when inactive (no covariance learned yet), else
        whether the proposal was accepted.
        """
        if self.joint_L is None:
            return None
        step = np.exp(self.joint_log_scale) * (
            self.joint_L @ self.rng.standard_normal(self.n_cont)
        )
        if self.sigma is not None and self.n_cont == len(self.phi) + 1:
            pv = ParamVector(self.phi + step[:-1], self.sigma + step[-1], self.beta)
        else:
            pv = ParamVector(self.phi + step, self.sigma, self.beta)
        lp, ll, preds = self._eval(pv, reuse_preds=False)
        accepted = False
        if ll is not None:
            delta = (lp + ll) - (self.lp + self.ll)
            if self._accept(delta):
                accepted = True
                self.phi = np.array(pv.phi, dtype=float)
                self.sigma = pv.sigma
                self.lp, self.ll, self.preds = lp, ll, preds
        if adapting:
            gamma = self.t ** -0.6
            self.joint_log_scale += gamma * (
                (1.0 if accepted else 0.0) - self.joint_target
            )
        return accepted

    def update_binary(self, j) -> bool:
        beta = self.beta.copy()
        beta[j] = not beta[j]
        pv = ParamVector(self.phi, self.sigma, beta)
        lp, ll, preds = self._eval(pv, reuse_preds=False)
        if ll is None:
            return False
        delta = (lp + ll) - (self.lp + self.ll)
        if self._accept(delta):
            self.beta = beta
            self.lp, self.ll, self.preds = lp, ll, preds
            return True
        return False

    def sweep(self, adapting=False, random_scan=False, accept_out=None):
        self.t += 1
        order = np.arange(self.n_cont + self.n_bin)
        if random_scan:
            order = self.rng.permutation(order)
        for idx in order:
            if idx < self.n_cont:
                ok = self.update_continuous(int(idx), adapting)
            else:
                ok = self.update_binary(int(idx) - self.n_cont)
            if accept_out is not None and ok:
                accept_out[idx] += 1


def draw_sample_continuous(state: ParamVector, i: int, model, rng, scale: float) -> ParamVector:
    """One random-walk Metropolis update of continuous parameter ``i``."""
    w = _Walker(model, rng)
    w.set_state(state)
    w.log_scales[i] = np.log(scale)
    w.update_continuous(i, adapting=False)
    return w.state


def draw_sample_binary(state: ParamVector, j: int, model, rng) -> ParamVector:
    """One complement-proposal Metropolis update of inclusion flag ``j``."""
    w = _Walker(model, rng)
    w.set_state(state)
    w.update_binary(j)
    return w.state


def gibbs_sweep(state: ParamVector, model, rng, scales=None) -> ParamVector:
    """One full fixed-order pass over all parameters."""
    w = _Walker(model, rng, scales=scales)
    w.set_state(state)
    w.sweep()
    return w.state


def run_chains(config: SamplerConfig, model, init: ParamVector = None) -> ChainSet:
    """Run ``config.n_chains`` independent chains and record every iteration.

    Chains get independent RNG streams spawned from the seed, so results are
    reproducible bit-for-bit regardless of how many chains run.  Proposal
    scales adapt during burn-in only.
    """
    names = list(model.param_names)
    n_params = len(names)
    if n_params != model.n_continuous + model.n_binary:
        raise ValueError("param_names length disagrees with parameter counts")

    samples = np.empty((config.n_chains, config.n_iterations, n_params))
    accepts = np.zeros((config.n_chains, n_params), dtype=np.int64)
    accepts_post = np.zeros((config.n_chains, n_params), dtype=np.int64)
    j_acc = np.zeros(config.n_chains, dtype=np.int64)
    j_prop = np.zeros(config.n_chains, dtype=np.int64)
    j_acc_post = np.zeros(config.n_chains, dtype=np.int64)
    j_prop_post = np.zeros(config.n_chains, dtype=np.int64)

    # joint moves need a learned covariance, so they require burn-in
    # adaptation; skip the earliest burn-in part where scales still swing
    use_joint = (
        config.joint_moves > 0
        and config.adapt
        and config.burn_in > 0
        and model.n_continuous > 0
    )
    cov_skip = config.burn_in // 4

    streams = np.random.SeedSequence(config.seed).spawn(config.n_chains)
    for c, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        walker = _Walker(
            model,
            rng,
            scales=config.step_fraction * np.asarray(model.prior_scale_hints(), float),
            target_accept=config.target_accept,
        )
        walker.set_state(
            model.initial_state(rng, config.init_strategy) if init is None else init
        )
        sweep_accept = np.zeros(n_params, dtype=np.int64)
        for it in range(config.n_iterations):
            adapting = config.adapt and it < config.burn_in
            before = sweep_accept.copy()
            walker.sweep(
                adapting=adapting,
                random_scan=config.random_scan,
                accept_out=sweep_accept,
            )
            if it >= config.burn_in:
                accepts_post[c] += sweep_accept - before
            if use_joint:
                if adapting and it >= cov_skip:
                    walker.accumulate_cov()
                    walker.refresh_joint()
                for _ in range(config.joint_moves):
                    ok = walker.update_joint(adapting)
                    if ok is None:
                        continue
                    j_prop[c] += 1
                    j_acc[c] += ok
                    if it >= config.burn_in:
                        j_prop_post[c] += 1
                        j_acc_post[c] += ok
            walker._flat(samples[c, it])
        accepts[c] = sweep_accept
    return ChainSet(
        samples, names, accepts, accepts_post, config.burn_in, config.seed,
        joint_accepts=j_acc, joint_proposals=j_prop,
        joint_accepts_post=j_acc_post, joint_proposals_post=j_prop_post,
    )


# ---------------------------------------------------------------------------
# chain storage: one CSV per chain plus a JSON manifest


def save_chains(chains: ChainSet, out_dir, config: SamplerConfig = None, extra: dict = None):
    """Write chain_<k>.csv files and manifest.json into ``out_dir``.

    Floats are written with ``repr`` so identical runs produce identical
    bytes; the manifest carries the seed, the config and acceptance rates.
    """
    os.makedirs(out_dir, exist_ok=True)
    for c in range(chains.n_chains):
        path = os.path.join(out_dir, f"chain_{c}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(chains.param_names)
            for row in chains.samples[c]:
                w.writerow([repr(float(v)) for v in row])
    manifest = {
        "seed": int(chains.seed),
        "burn_in": int(chains.burn_in),
        "n_iterations": int(chains.n_iterations),
        "n_chains": int(chains.n_chains),
        "param_names": list(chains.param_names),
        "accept_counts": chains.accept_counts.tolist(),
        "accept_counts_post": chains.accept_counts_post.tolist(),
        "acceptance_rates_post": chains.acceptance_rates().tolist(),
    }
    if chains.joint_proposals is not None:
        manifest["joint_accepts"] = chains.joint_accepts.tolist()
        manifest["joint_proposals"] = chains.joint_proposals.tolist()
        manifest["joint_accepts_post"] = chains.joint_accepts_post.tolist()
        manifest["joint_proposals_post"] = chains.joint_proposals_post.tolist()
    if config is not None:
        manifest["config"] = asdict(config)
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_chains(in_dir) -> ChainSet:
    with open(os.path.join(in_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    names = manifest["param_names"]
    samples = np.empty(
        (manifest["n_chains"], manifest["n_iterations"], len(names))
    )
    for c in range(manifest["n_chains"]):
        path = os.path.join(in_dir, f"chain_{c}.csv")
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != names:
                raise ValueError(f"{path}: header disagrees with manifest")
            for it, row in enumerate(reader):
                samples[c, it] = [float(v) for v in row]
    def opt(key):
        return (
            np.asarray(manifest[key], dtype=np.int64) if key in manifest else None
        )

    return ChainSet(
        samples,
        names,
        np.asarray(manifest["accept_counts"], dtype=np.int64),
        np.asarray(manifest["accept_counts_post"], dtype=np.int64),
        manifest["burn_in"],
        manifest["seed"],
        joint_accepts=opt("joint_accepts"),
        joint_proposals=opt("joint_proposals"),
        joint_accepts_post=opt("joint_accepts_post"),
        joint_proposals_post=opt("joint_proposals_post"),
    )
