import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynfusion import ClassifierProfile, ClassifierSpec, ConfigError, SchedulerParams, combined_prob, schedule
from dynfusion.scheduler import time_critical

from oracles import schedule_bruteforce


def make_profile(probs, costs=None, times=None, ctx="c"):
    costs = costs or {k: 1.0 for k in probs}
    times = times or {k: 100 for k in probs}
    return ClassifierProfile.from_specs(
        ClassifierSpec(cid, {ctx: p}, times[cid], costs[cid]) for cid, p in probs.items())


def test_combined_prob_examples():
    prof = make_profile({"A": 0.8, "B": 0.7})
    assert combined_prob(prof, {"A"}, "c") == pytest.approx(0.8)
    # 1 - 0.2 * 0.3
    assert combined_prob(prof, {"A", "B"}, "c") == pytest.approx(0.94, abs=1e-12)
    assert combined_prob(prof, set(), "c") == 0.0


def test_combined_prob_missing_context():
    with pytest.raises(ConfigError):
        combined_prob(make_profile({"A": 0.8}), {"A"}, "other")


def test_schedule_picks_cheapest_candidate():
    prof = make_profile({"A": 0.8, "B": 0.7, "C": 0.95}, costs={"A": 2, "B": 1, "C": 5})
    got = schedule(prof, {"A", "B", "C"}, "c", dt_crit=10_000, params=SchedulerParams(0.9, 1000))
    assert got == {"A", "B"}


def test_schedule_defaults_to_all_without_candidate():
    prof = make_profile({"A": 0.6, "B": 0.5, "C": 0.4})
    # best possible is 1 - 0.4*0.5*0.6 = 0.88
    got = schedule(prof, {"A", "B", "C"}, "c", dt_crit=10_000, params=SchedulerParams(0.9, 1000))
    assert got == {"A", "B", "C"}


def test_zero_critical_time_activates_everything():
    prof = make_profile({"A": 0.99, "B": 0.1, "C": 0.1}, costs={"A": 1, "B": 50, "C": 50})
    assert schedule(prof, {"A", "B", "C"}, "c", 0, SchedulerParams(0.9, 1000)) == {"A", "B", "C"}


def test_threshold_is_strict():
    prof = make_profile({"A": 0.5, "B": 0.99})
    got = schedule(prof, {"A", "B"}, "c", 10_000, SchedulerParams(th_p=0.5, dt_delay=1))
    assert got == {"B"}  # {A} sits exactly at th_p and is not a candidate


def test_equal_cost_tie_goes_to_smallest_ids():
    prof = make_profile({"b": 0.95, "a": 0.95, "c": 0.99})
    assert schedule(prof, {"a", "b", "c"}, "c", 10_000, SchedulerParams(0.9, 1000)) == {"a"}


def test_time_critical_classifier_joins_every_candidate():
    # C is time critical: it rides along with every candidate and is costed with it
    prof = make_profile({"A": 0.95, "C": 0.95}, costs={"A": 1, "C": 1}, times={"A": 10, "C": 5000})
    got = schedule(prof, {"A", "C"}, "c", dt_crit=5500, params=SchedulerParams(0.9, 1000))
    assert time_critical(prof, {"A", "C"}, 5500, 1000) == {"C"}
    assert got == {"C"}  # {C} as a subset is a candidate in its own right (0.95 > 0.9)
    prof2 = make_profile({"A": 0.95, "C": 0.1}, times={"A": 10, "C": 5000})
    assert schedule(prof2, {"A", "C"}, "c", 5500, SchedulerParams(0.9, 1000)) == {"A", "C"}


def test_schedule_rejects_empty_and_oversized():
    with pytest.raises(ConfigError):
        schedule(make_profile({"A": 0.9}), set(), "c", 0, SchedulerParams())
    big = make_profile({f"k{i:02d}": 0.5 for i in range(17)})
    with pytest.raises(ConfigError):
        schedule(big, big.cids, "c", 0, SchedulerParams())


def test_params_validation():
    with pytest.raises(ConfigError):
        SchedulerParams(th_p=1.5)
    with pytest.raises(ConfigError):
        SchedulerParams(dt_delay=0)
    with pytest.raises(ConfigError):
        ClassifierSpec("x", {"c": 1.2}, 10)


def test_custom_cost_function():
    prof = make_profile({"A": 0.95, "B": 0.95})
    prof.cost_fn = lambda s: 10.0 if "A" in s else 1.0
    assert schedule(prof, {"A", "B"}, "c", 10_000, SchedulerParams(0.9, 1)) == {"B"}


@st.composite
def random_profiles(draw):
    n = draw(st.integers(1, 6))
    cids = [f"s{i}" for i in range(n)]
    probs = {c: {"x": draw(st.floats(0, 1))} for c in cids}
    costs = {c: float(draw(st.integers(0, 5))) for c in cids}
    times = {c: draw(st.integers(1, 3000)) for c in cids}
    th_p = draw(st.floats(0, 1))
    dt_crit = draw(st.integers(0, 5000))
    return cids, probs, costs, times, th_p, dt_crit


@settings(max_examples=300)
@given(random_profiles())
def test_matches_bruteforce_and_invariants(case):
    cids, probs, costs, times, th_p, dt_crit = case
    prof = ClassifierProfile.from_specs(ClassifierSpec(c, probs[c], times[c], costs[c]) for c in cids)
    params = SchedulerParams(th_p, 1000)
    got = schedule(prof, cids, "x", dt_crit, params)
    assert got == schedule_bruteforce(probs, costs, times, "x", dt_crit, th_p, 1000)
    crit = time_critical(prof, cids, dt_crit, 1000)
    assert crit <= got
    assert combined_prob(prof, got, "x") > th_p or got == set(cids)
    assert schedule(prof, list(reversed(cids)), "x", dt_crit, params) == got
