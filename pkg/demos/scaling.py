"""Wall-clock scaling of the sampler: inert extra parameters cost roughly
linearly, extra rules grow the inference work inside every likelihood call.
Numbers are machine-specific; the trends are the point."""
from fuzzybayes.datagen import scaling_bench

rows = scaling_bench(param_counts=(9, 18, 36), rule_counts=(3, 6, 12),
                     iterations=2000, repeats=2)

for kind in ("params", "rules"):
    print(f"\n{kind:>11} {'seconds':>9}")
    for row in rows:
        if row["kind"] == kind:
            print(f"{row['size']:>11} {row['mean_seconds']:>9.2f}")

par = [r["mean_seconds"] for r in rows if r["kind"] == "params"]
print(f"\ndoubling parameters 9->18 multiplies time by {par[1] / par[0]:.2f}, "
      f"18->36 by {par[2] / par[1]:.2f}")
