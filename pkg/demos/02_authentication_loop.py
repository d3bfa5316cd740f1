# %% [markdown]
# # A continuous authentication session
#
# The bundled multi-modal setup simulates a two-minute session: the owner
# uses the phone in two contexts, an impostor picks it up, and the owner
# re-enrolls. At every loop step the device fuses recent scores, works out
# how long it can wait before locking, and activates only the classifiers it
# needs.

# %%
from collections import Counter

from dynfusion import load_config, run_scenario
from dynfusion.authloop import SyntheticSource
from dynfusion.experiment import prepare

cfg = load_config("multimodal")
prep = prepare(cfg, train_cwma=False)
trace = run_scenario(cfg.scenario, prep.policy_config, prep.setup.profile, SyntheticSource(prep.model))
print(f"{len(trace)} steps, {trace[-1].score_calcs} score calculations in total")

# %% [markdown]
# One line per 5 s. `beta` is the fused score; `-` means no score was inside
# the window.

# %%
for row in trace[::5]:
    beta = "-" if row.beta is None else f"{row.beta:+.2f}"
    seg = cfg.scenario.segment_at(row.t_ms)
    who = "owner" if seg.genuine else "impostor"
    print(f"{row.t_ms / 1000:6.0f} s  {row.context:<6} {who:<9} beta={beta:>6}  "
          f"{row.state.value:<8} activated={','.join(sorted(row.activated)) or '-'}")

# %% [markdown]
# How fast was the impostor locked out, and how often was each classifier
# woken up?

# %%
impostor = [r for r in trace if not cfg.scenario.segment_at(r.t_ms).genuine]
first_lock = next(r.t_ms for r in impostor if r.state.value == "locked")
print(f"impostor arrives at {impostor[0].t_ms} ms, device locked at {first_lock} ms")
print(Counter(cid for r in trace for cid in r.activated))
