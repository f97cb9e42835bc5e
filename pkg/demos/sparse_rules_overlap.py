"""What happens when the rule base is missing a rule the data needs?

The tomato data comes from three colour bands (green / half-ripe / red,
non-overlapping triangles), but the fitted base only keeps the green and
red rules. To explain the points in the middle the posterior stretches the
two remaining membership functions until they overlap heavily. These fits
reject any parameter state that strands an observation outside every rule,
so the stretching is forced on the sampler rather than optional.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fuzzybayes import datagen, models
from fuzzybayes.fuzzy import bind_params, membership
from fuzzybayes.sampler import SamplerConfig, run_chains

preset = datagen.get_preset("tomato_sparse")
data, truth = datagen.generate(preset)
model = models.FuzzyModel.from_preset(preset, data=data)
print("fitted rules keep only:", [preset.rule_base.output.labels[r.consequent]
                                  for r in preset.rule_base.rules])

chains = run_chains(SamplerConfig(seed=11), model)
mean = models.posterior_mean_params(chains, model)

phi_g = mean.phi[model.param_names.index("colour.GREEN")]
phi_r = mean.phi[model.param_names.index("colour.RED")]
print(f"posterior mean half-widths: GREEN {phi_g:.2f}, RED {phi_r:.2f}")
print(f"their supports share {phi_g + phi_r - 10.0:.2f} of the 10-unit universe")

u = np.linspace(0, 10, 500)
fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
gen = bind_params(preset.generating_base, truth)
for mf, lab in zip(gen.inputs[0].mfs, gen.inputs[0].labels):
    axes[0].plot(u, membership(u, mf), label=lab)
axes[0].legend()
axes[0].set_title("generating bands (three rules, no overlap)")

fitted = bind_params(model.rule_base, mean)
for mf, lab in zip(fitted.inputs[0].mfs, fitted.inputs[0].labels):
    axes[1].plot(u, membership(u, mf), label=lab)
axes[1].legend()
axes[1].set_title("posterior mean with the middle rule removed")
axes[1].set_xlabel("colour")
fig.tight_layout()
fig.savefig("sparse_rules_overlap.png", dpi=120)
print("wrote sparse_rules_overlap.png")
