# %% [markdown]
# # Scheduling classifiers and fusing their scores
#
# Three classifiers watch the same user: two face matchers (frontal and
# profile enrollment) and a voice matcher. Each one is only trustworthy in some
# contexts, so the device picks the cheapest set whose combined
# authentication probability clears `th_p`, then fuses whatever scores arrived
# inside the context's authentication window.

# %%
from dynfusion import (
    ClassifierProfile,
    ClassifierSpec,
    History,
    ScoreRecord,
    SchedulerParams,
    WindowPolicy,
    critical_time,
    fuse,
    schedule,
)

profile = ClassifierProfile.from_specs([
    ClassifierSpec("face_front", {"frontal": 0.97, "profile": 0.89}, time_ms=400, cost=1.0),
    ClassifierSpec("face_side", {"frontal": 0.80, "profile": 0.91}, time_ms=400, cost=1.0),
    ClassifierSpec("voice", {"frontal": 0.93, "profile": 0.93}, time_ms=800, cost=1.5),
])
params = SchedulerParams(th_p=0.9, dt_delay=1000)

# %% [markdown]
# With plenty of slack before the device would lock, a single classifier is
# enough whenever one of them clears 0.9 on its own.

# %%
for ctx in ("frontal", "profile"):
    print(f"{ctx:>8}: {sorted(schedule(profile, profile.cids, ctx, 10_000, params))}")

# %% [markdown]
# Raising the bar to 0.99 forces a pair. With only 1.6 s left before the
# lock (`dt_crit`), voice (800 ms capture plus the 1 s loop delay) cannot
# deliver in time unless it starts now, so it is forced in; being enough on
# its own in this context, it then replaces the cheaper face matcher.

# %%
strict = SchedulerParams(th_p=0.99, dt_delay=1000)
print("th_p=0.99      :", sorted(schedule(profile, profile.cids, "frontal", 10_000, strict)))
print("dt_crit=1600 ms:", sorted(schedule(profile, profile.cids, "frontal", 1_600, params)))

# %% [markdown]
# ## Two-dimensional fusion
#
# Scores are averaged over time per classifier, then across classifiers.
# Only records strictly newer than `t_now - window` count.

# %%
policy = WindowPolicy({"frontal": 5_000, "profile": 8_000})
history = History([
    ScoreRecord("face_front", 1.4, 1_000),
    ScoreRecord("face_front", 0.6, 3_000),
    ScoreRecord("voice", 0.2, 4_500),
])
for t_now in (5_000, 6_000, 8_000, 9_500, 10_000):
    beta = fuse(profile.cids, history, "frontal", t_now, policy)
    print(f"t={t_now:>6} ms  beta={'none' if beta is None else f'{beta:.2f}'}")

# %% [markdown]
# The critical time is how long the device may wait, with no new scores,
# before the fused score drops below `th_beta`.

# %%
for th_beta in (0.3, 0.5, 0.9):
    dt = critical_time(profile.cids, history, "frontal", 5_000, policy, None, th_beta)
    print(f"th_beta={th_beta}: locks in {dt} ms")
