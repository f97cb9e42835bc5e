"""Binary responses through the same machinery: the crisp output lives on
[0, 1] and feeds a Bernoulli likelihood, so classification needs no new
engine. Misclassifications should hug the decision boundary."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fuzzybayes import datagen, models
from fuzzybayes.fuzzy import bind_params, infer_batch
from fuzzybayes.sampler import SamplerConfig, run_chains

preset = datagen.get_preset("classification")
data, truth = datagen.generate(preset)
model = models.FuzzyModel.from_preset(preset, data=data)
chains = run_chains(SamplerConfig(seed=11), model)

labels = models.classify(chains, model, data.X)
acc = np.mean(labels == data.y)
print(f"training accuracy {acc:.3f} ({int((labels != data.y).sum())} errors)")

# probability surface under the posterior mean, class-coloured data on top
mean = models.posterior_mean_params(chains, model)
g1, g2 = np.meshgrid(np.linspace(0, 10, 120), np.linspace(0, 10, 120))
grid = np.column_stack([g1.ravel(), g2.ravel()])
psi = infer_batch(bind_params(model.rule_base, mean), grid).reshape(g1.shape)

fig, ax = plt.subplots(figsize=(5, 4))
im = ax.contourf(g1, g2, psi, levels=20, cmap="RdBu_r")
ax.contour(g1, g2, psi, levels=[0.5], colors="k")
for cls, marker in ((0.0, "o"), (1.0, "^")):
    pts = data.X[data.y == cls]
    ax.scatter(pts[:, 0], pts[:, 1], marker=marker, s=18,
               edgecolor="k", linewidth=0.4, label=f"class {int(cls)}")
ax.set_xlabel(data.column_names[0])
ax.set_ylabel(data.column_names[1])
ax.legend(loc="upper right")
fig.colorbar(im, label="event probability")
fig.tight_layout()
fig.savefig("classification_surface.png", dpi=120)
print("wrote classification_surface.png")
