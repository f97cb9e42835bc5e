"""Fit the three-rule downtime system to 15 noiseless points and look at
what the posterior says about each membership half-width."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fuzzybayes import datagen, models
from fuzzybayes.diagnostics import summarize
from fuzzybayes.fuzzy import bind_params, membership
from fuzzybayes.sampler import SamplerConfig, run_chains

data, truth = datagen.generate("case1")
model = models.FuzzyModel.from_preset("case1", data=data)

print(f"{data.n} observations, {len(model.param_names)} parameters")
chains = run_chains(SamplerConfig(seed=11), model)

summary = summarize(chains)
print(f"\n{'parameter':<18}{'truth':>7}{'mean':>9}{'95% hdi':>20}{'R-hat':>8}")
for p, true in zip(summary.params, truth.phi):
    print(f"{p.name:<18}{true:>7.1f}{p.mean:>9.3f}"
          f"   [{p.hdi_lo:8.3f},{p.hdi_hi:8.3f}]{p.gelman_rubin:>8.3f}")

# the fitted triangles, drawn over the generating ones
mean = models.posterior_mean_params(chains, model)
fitted = bind_params(model.rule_base, mean)
true_base = bind_params(model.rule_base, truth)

fig, axes = plt.subplots(1, 3, figsize=(12, 3))
for ax, j in zip(axes, range(2)):
    u = np.linspace(0, 10, 400)
    for mf_t, mf_f in zip(true_base.inputs[j].mfs, fitted.inputs[j].mfs):
        ax.plot(u, membership(u, mf_t), "k--", lw=1)
        ax.plot(u, membership(u, mf_f), lw=1.5)
    ax.set_title(fitted.inputs[j].name)
u = np.linspace(0, 100, 400)
for mf_t, mf_f in zip(true_base.output.mfs, fitted.output.mfs):
    axes[2].plot(u, membership(u, mf_t), "k--", lw=1)
    axes[2].plot(u, membership(u, mf_f), lw=1.5)
axes[2].set_title(fitted.output.name)
fig.suptitle("posterior-mean membership functions (dashed = generating)")
fig.tight_layout()
fig.savefig("downtime_fit_mfs.png", dpi=120)
print("\nwrote downtime_fit_mfs.png")
