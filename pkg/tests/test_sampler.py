import numpy as np
import pytest

from fuzzybayes import datagen
from fuzzybayes.fuzzy import ParamVector
from fuzzybayes.models import FuzzyModel
from fuzzybayes.probability import BernoulliPrior, NormalPrior, PriorSpec, UniformPrior, log_prior
from fuzzybayes.sampler import (
    SamplerConfig,
    draw_sample_binary,
    draw_sample_continuous,
    gibbs_sweep,
    load_chains,
    run_chains,
    save_chains,
)


class GaussianTarget:
    """One continuous parameter, N(mu, sd^2) posterior via the prior alone."""

    def __init__(self, mu=2.0, sd=1.5):
        self.prior = PriorSpec((NormalPrior(mu, sd),))
        self.param_names = ["x"]
        self.n_continuous = 1
        self.n_binary = 0
        self.sigma_index = None

    def log_prior(self, theta):
        return log_prior(theta, self.prior)

    def log_likelihood(self, theta):
        return 0.0

    def initial_state(self, rng, strategy="median"):
        comp = self.prior.phi[0]
        x = comp.median if strategy == "median" else comp.draw(rng)
        return ParamVector(np.array([x]))

    def prior_scale_hints(self):
        return np.array([self.prior.phi[0].scale_hint])


class FlatTarget(GaussianTarget):
    """Uniform posterior on (0, 10]; interior proposals always accepted."""

    def __init__(self):
        self.prior = PriorSpec((UniformPrior(0.0, 10.0),))
        self.param_names = ["x"]
        self.n_continuous = 1
        self.n_binary = 0
        self.sigma_index = None


class CoinTarget:
    """A single inclusion flag with no data: stationary P(on) = p_incl."""

    def __init__(self, p_incl=0.8):
        self.prior = PriorSpec((), beta=BernoulliPrior(p_incl))
        self.param_names = ["rule1.included"]
        self.n_continuous = 0
        self.n_binary = 1
        self.sigma_index = None

    def log_prior(self, theta):
        return log_prior(theta, self.prior)

    def log_likelihood(self, theta):
        return 0.0

    def initial_state(self, rng, strategy="median"):
        return ParamVector(np.empty(0), beta=np.array([True]))

    def prior_scale_hints(self):
        return np.empty(0)


def case1_model():
    pre = datagen.get_preset("case1")
    data, _ = datagen.generate(pre)
    return FuzzyModel.from_preset(pre, data=data)


class TestConfigValidation:
    def test_defaults_valid(self):
        cfg = SamplerConfig()
        assert cfg.n_iterations == 10_000
        assert cfg.burn_in == 2_000
        assert cfg.n_chains == 3
        assert cfg.step_fraction == 0.025
        assert cfg.target_accept == 0.35

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_iterations=0),
            dict(burn_in=-1),
            dict(burn_in=100, n_iterations=100),
            dict(n_chains=0),
            dict(step_fraction=0.0),
            dict(target_accept=0.0),
            dict(target_accept=1.0),
            dict(init_strategy="mode"),
            dict(joint_moves=-1),
        ],
    )
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ValueError):
            SamplerConfig(**kwargs)


class TestRunChains:
    def test_shapes_and_burn_in_recorded(self):
        m = GaussianTarget()
        cfg = SamplerConfig(n_iterations=300, burn_in=50, n_chains=2, seed=1)
        ch = run_chains(cfg, m)
        assert ch.samples.shape == (2, 300, 1)
        assert ch.post_burn_in().shape == (2, 250, 1)
        assert ch.pooled().shape == (500, 1)
        assert ch.burn_in == 50 and ch.seed == 1
        assert ch.param_names == ["x"]

    def test_deterministic_for_fixed_seed(self):
        m = case1_model()
        cfg = SamplerConfig(n_iterations=120, burn_in=40, n_chains=2, seed=9)
        a = run_chains(cfg, m)
        b = run_chains(cfg, m)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.accept_counts, b.accept_counts)
        assert np.array_equal(a.joint_accepts, b.joint_accepts)

    def test_seed_changes_output(self):
        m = GaussianTarget()
        cfg1 = SamplerConfig(n_iterations=100, burn_in=20, n_chains=1, seed=1)
        cfg2 = SamplerConfig(n_iterations=100, burn_in=20, n_chains=1, seed=2)
        assert not np.array_equal(run_chains(cfg1, m).samples, run_chains(cfg2, m).samples)

    def test_chains_differ_from_each_other(self):
        m = GaussianTarget()
        ch = run_chains(SamplerConfig(n_iterations=200, burn_in=50, n_chains=3, seed=4), m)
        assert not np.array_equal(ch.samples[0], ch.samples[1])
        assert not np.array_equal(ch.samples[1], ch.samples[2])

    def test_gaussian_target_moments(self):
        # 1-d target with known moments; estimates within 2%
        m = GaussianTarget(mu=2.0, sd=1.5)
        cfg = SamplerConfig(n_iterations=50_000, burn_in=2_000, n_chains=1, seed=5)
        draws = run_chains(cfg, m).pooled()[:, 0]
        assert draws.mean() == pytest.approx(2.0, abs=0.02 * 2.0)
        assert draws.var() == pytest.approx(1.5**2, rel=0.02)

    def test_flat_target_high_acceptance(self):
        # fixed moderate scale: only proposals past the support edge reject
        # (with adaptation on, the scale would grow until ~35% accept)
        m = FlatTarget()
        cfg = SamplerConfig(n_iterations=4000, burn_in=1000, n_chains=1, seed=6, adapt=False)
        ch = run_chains(cfg, m)
        assert ch.acceptance_rates()[0, 0] > 0.9
        draws = ch.pooled()[:, 0]
        assert draws.min() > 0.0 and draws.max() <= 10.0

    def test_binary_stationary_frequency(self):
        m = CoinTarget(p_incl=0.8)
        cfg = SamplerConfig(n_iterations=20_000, burn_in=1_000, n_chains=1, seed=7)
        ch = run_chains(cfg, m)
        freq = ch.pooled()[:, 0].mean()
        assert freq == pytest.approx(0.8, abs=0.015)
        assert ch.joint_acceptance_rates() is None  # no continuous block

    def test_case1_acceptance_rates_in_band(self):
        # single-site rates over a full-length run stay in a healthy band
        m = case1_model()
        cfg = SamplerConfig(n_chains=1, seed=11)
        rates = run_chains(cfg, m).acceptance_rates()[0]
        assert np.all(rates >= 0.1) and np.all(rates <= 0.7)

    def test_explicit_init_used(self):
        m = GaussianTarget()
        init = ParamVector(np.array([40.0]))  # far tail, unmistakable
        cfg = SamplerConfig(n_iterations=5, burn_in=1, n_chains=1, seed=8, adapt=False)
        ch = run_chains(cfg, m, init=init)
        assert abs(ch.samples[0, 0, 0] - 40.0) < 1.0

    def test_init_outside_support_raises(self):
        m = FlatTarget()
        with pytest.raises(ValueError):
            run_chains(
                SamplerConfig(n_iterations=10, burn_in=2, n_chains=1, seed=1),
                m,
                init=ParamVector(np.array([-3.0])),
            )

    def test_median_init_starts_all_chains_together(self):
        m = GaussianTarget(mu=2.0, sd=1.5)
        cfg = SamplerConfig(
            n_iterations=1, burn_in=0, n_chains=3, seed=3, adapt=False, joint_moves=0
        )
        ch = run_chains(cfg, m)
        # one sweep from a common start: all first samples near the median
        assert np.all(np.abs(ch.samples[:, 0, 0] - 2.0) < 1.0)

    def test_prior_init_disperses_chains(self):
        m = GaussianTarget(mu=0.0, sd=10.0)
        cfg = SamplerConfig(
            n_iterations=1, burn_in=0, n_chains=4, seed=3, adapt=False,
            init_strategy="prior", joint_moves=0,
        )
        ch = run_chains(cfg, m)
        assert np.std(ch.samples[:, 0, 0]) > 1.0

    def test_no_adapt_means_no_joint_moves(self):
        m = case1_model()
        cfg = SamplerConfig(n_iterations=60, burn_in=0, n_chains=1, seed=2, adapt=False)
        ch = run_chains(cfg, m)
        assert not np.any(ch.joint_proposals)
        assert ch.joint_acceptance_rates() is None

    def test_joint_moves_run_and_are_counted(self):
        m = case1_model()
        cfg = SamplerConfig(n_iterations=400, burn_in=200, n_chains=1, seed=2)
        ch = run_chains(cfg, m)
        assert ch.joint_proposals[0] > 0
        assert ch.joint_proposals_post[0] == 2 * 200
        assert 0 <= ch.joint_accepts[0] <= ch.joint_proposals[0]


class TestSingleSiteOps:
    def setup_method(self):
        self.model = case1_model()
        self.state = ParamVector(np.array([5.0] * 6 + [50.0] * 3))

    def test_draw_continuous_touches_one_slot(self):
        rng = np.random.default_rng(0)
        for i in range(9):
            new = draw_sample_continuous(self.state, i, self.model, rng, scale=0.5)
            diff = np.nonzero(new.phi != self.state.phi)[0]
            assert set(diff) <= {i}

    def test_draw_continuous_moves_under_flat_target(self):
        m = FlatTarget()
        rng = np.random.default_rng(1)
        moved = 0
        state = ParamVector(np.array([5.0]))
        for _ in range(50):
            new = draw_sample_continuous(state, 0, m, rng, scale=0.5)
            moved += new.phi[0] != state.phi[0]
            state = new
        assert moved > 40  # nearly every interior proposal accepted

    def test_draw_binary_flips_or_keeps(self):
        pre = datagen.get_preset("case4")
        data, _ = datagen.generate(pre)
        m = FuzzyModel.from_preset(pre, data=data)
        rng = np.random.default_rng(2)
        state = m.initial_state(rng)
        new = draw_sample_binary(state, 3, m, rng)
        changed = np.nonzero(new.beta != state.beta)[0]
        assert set(changed) <= {3}
        assert np.array_equal(new.phi, state.phi)

    def test_gibbs_sweep_returns_fresh_state(self):
        rng = np.random.default_rng(3)
        new = gibbs_sweep(self.state, self.model, rng)
        assert new is not self.state
        assert new.phi.shape == (9,)
        # sweep output stays in the prior's support
        assert log_prior(new, self.model.prior) > -np.inf


class TestScaleFreezing:
    def test_scales_fixed_when_not_adapting(self):
        from fuzzybayes.sampler import _Walker

        m = GaussianTarget()
        rng = np.random.default_rng(4)
        w = _Walker(m, rng)
        w.set_state(m.initial_state(rng))
        w.t = 50
        before = w.log_scales.copy()
        for _ in range(100):
            w.update_continuous(0, adapting=False)
        assert np.array_equal(w.log_scales, before)

    def test_scales_move_when_adapting(self):
        from fuzzybayes.sampler import _Walker

        m = GaussianTarget()
        rng = np.random.default_rng(5)
        w = _Walker(m, rng)
        w.set_state(m.initial_state(rng))
        before = w.log_scales.copy()
        for _ in range(100):
            w.t += 1
            w.update_continuous(0, adapting=True)
        assert not np.array_equal(w.log_scales, before)


class TestSaveLoad:
    def test_round_trip(self, tmp_path):
        m = case1_model()
        cfg = SamplerConfig(n_iterations=80, burn_in=20, n_chains=2, seed=13)
        ch = run_chains(cfg, m)
        save_chains(ch, tmp_path, config=cfg)
        back = load_chains(tmp_path)
        assert np.array_equal(back.samples, ch.samples)
        assert back.param_names == ch.param_names
        assert back.burn_in == ch.burn_in and back.seed == ch.seed
        assert np.array_equal(back.accept_counts, ch.accept_counts)
        assert np.array_equal(back.joint_proposals, ch.joint_proposals)
        assert np.array_equal(back.joint_accepts_post, ch.joint_accepts_post)

    def test_header_mismatch_rejected(self, tmp_path):
        m = GaussianTarget()
        ch = run_chains(SamplerConfig(n_iterations=20, burn_in=5, n_chains=1, seed=1), m)
        save_chains(ch, tmp_path)
        csv_path = tmp_path / "chain_0.csv"
        text = csv_path.read_text().splitlines()
        text[0] = "not_x"
        csv_path.write_text("\n".join(text) + "\n")
        with pytest.raises(ValueError):
            load_chains(tmp_path)

    def test_save_is_reproducible_bytes(self, tmp_path):
        m = GaussianTarget()
        cfg = SamplerConfig(n_iterations=30, burn_in=10, n_chains=1, seed=21)
        for sub in ("a", "b"):
            save_chains(run_chains(cfg, m), tmp_path / sub, config=cfg)
        for name in ("chain_0.csv", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()
