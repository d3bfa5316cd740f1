# %% [markdown]
# # Sequential fusion versus parallel fusion rules
#
# Parallel rules (max, sum, CWMA) activate every classifier at once. The
# dynamic approach spends the same budget differently: it schedules the best
# classifier for the context at k successive instants and fuses the samples.
# Synthetic scores are calibrated so each classifier alone hits its target
# EER.

# %%
import tempfile

from dynfusion import run_experiment

out = tempfile.mkdtemp(prefix="dynfusion-demo-")
summary = run_experiment("multimodal", out, trials=3000)

# %%
contexts = summary["contexts"]
print(f"{'approach':<10}" + "".join(f"{c:>9}" for c in contexts) + "   calcs")
for row in summary["approaches"]:
    cells = "".join(f"{100 * row['eer'][c]:8.2f}%" for c in contexts)
    print(f"{row['approach']:<10}{cells}   {row['score_calculations']}")

# %% [markdown]
# Which classifier did the scheduler pick per context, and how close are the
# standalone EERs to their targets?

# %%
print(summary["schedule"])
for cid, per_ctx in summary["classifiers"].items():
    print(cid, {c: f"{100 * v['eer']:.1f}% (target {100 * v['target_eer']:.1f}%)" for c, v in per_ctx.items()})

# %% [markdown]
# DET curves for every approach and context are in `det/` as CSV
# (`threshold,far,frr`).

# %%
print(out)
