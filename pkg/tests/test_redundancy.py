import pytest
from hypothesis import given, settings, strategies as st

from aft.faults import InjectionSchedule, burst_profile, parse_schedule
from aft.redundancy import (
    ControllerState,
    RedundancyMismatch,
    RedundancyPolicy,
    check_hysteresis,
    react,
    read_trace_csv,
    replica_votes,
    run_experiment,
)
from aft.voting import vote

POLICY = RedundancyPolicy()


def test_defaults():
    assert POLICY.levels() == [3, 5, 7, 9]
    assert (POLICY.raise_threshold, POLICY.calm_window, POLICY.step) == (1, 1000, 2)


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_min=4), dict(n_max=8), dict(n_min=9, n_max=3), dict(step=3), dict(step=4, n_max=9), dict(calm_window=0), dict(n_min=1)],
)
def test_invalid_policy(kwargs):
    with pytest.raises(ValueError):
        RedundancyPolicy(**kwargs)


def test_no_majority_raises():
    state = react(ControllerState(3), POLICY, vote(["a", "b", "c"]), t=0)
    assert state.n == 5 and state.calm_streak == 0
    assert [(e.t, e.kind, e.n_before, e.n_after) for e in state.history] == [(0, "raise", 3, 5)]


def test_single_dissent_at_three_raises():
    assert react(ControllerState(3), POLICY, vote("aab"), 0).n == 5


def test_lower_after_calm_window():
    state = ControllerState(5)
    for t in range(999):
        state = react(state, POLICY, vote("aaaaa"), t)
        assert state.n == 5
    assert state.calm_streak == 999
    state = react(state, POLICY, vote("aaaaa"), 999)
    assert state.n == 3 and state.calm_streak == 0
    assert str(state.history[-1]) == "lower 5->3"


def test_non_calm_round_resets_streak():
    state = ControllerState(5, calm_streak=998)
    state = react(state, POLICY, vote("aaaab"), 0)  # dtof 2: neither critical nor calm
    assert state.calm_streak == 0 and state.n == 5


def test_saturated_at_n_max():
    state = react(ControllerState(9), POLICY, vote("aaaabbbcc"), 7)
    assert state.n == 9
    assert state.last_event.kind == "saturated" and state.history == ()


def test_floor_holds_at_n_min():
    state = ControllerState(3, calm_streak=5000)
    state = react(state, POLICY, vote("aaa"), 0)
    assert state.n == 3 and state.last_event is None


def test_mismatched_round_rejected():
    with pytest.raises(RedundancyMismatch):
        react(ControllerState(5), POLICY, vote("aaa"), 0)


def test_calm_slack_lowers_bar():
    policy = RedundancyPolicy(calm_window=2, calm_slack=1)
    state = ControllerState(5)
    state = react(state, policy, vote("aaaab"), 0)
    state = react(state, policy, vote("aaaab"), 1)
    assert state.n == 3


def test_replica_votes():
    assert replica_votes(3, {1}) == [0, ("corrupt", 1), 0]


def test_zero_faults_stays_minimal():
    result = run_experiment(InjectionSchedule(), POLICY, 5000)
    assert dict(result.histogram) == {3: 5000}
    assert result.failures() == [] and result.events == {}


def test_single_burst_trace():
    # two replicas corrupted for steps 100..104
    sched = parse_schedule("".join(f"{t},r0,transient\n{t},r1,transient\n" for t in range(100, 105)))
    result = run_experiment(sched, POLICY, 3000)
    # hand replay: t=100 no majority at 3 -> 5; t=101 dtof 1 at 5 -> 7;
    # calm from 105, lower at 105+999=1104 and again at 2104
    assert {t: str(e) for t, e in result.events.items()} == {
        100: "raise 3->5", 101: "raise 5->7", 1104: "lower 7->5", 2104: "lower 5->3",
    }
    assert dict(result.histogram) == {3: 996, 5: 1001, 7: 1003}
    assert result.failures() == [100]
    assert result.histogram[3] >= 3000 - (POLICY.calm_window * 2 + 5 + 2)


def test_permanent_fault_keeps_farm_raised():
    sched = parse_schedule("10,r0,permanent\n")
    result = run_experiment(sched, POLICY, 5000)
    assert result.n[-1] == 5
    assert result.failures() == []


def test_trace_csv_round_trip():
    sched = burst_profile(3, 4000, 0.002, 3)
    result = run_experiment(sched, RedundancyPolicy(calm_window=50), 4000)
    rows = read_trace_csv(result.trace_csv())
    assert rows == list(result.rows())
    assert result.histogram_csv().startswith("r,steps\n3,")


def test_validator_flags_violations():
    policy = RedundancyPolicy(calm_window=2)
    good = [(0, 3, 0, 2, ""), (1, 3, 1, 1, "raise 3->5"), (2, 5, 0, 3, ""), (3, 5, 0, 3, "lower 5->3"), (4, 3, 0, 2, "")]
    assert check_hysteresis(good, policy) == []
    early = [(0, 5, 0, 3, "lower 5->3"), (1, 3, 0, 2, "")]
    assert any("lower after 1" in p for p in check_hysteresis(early, policy))
    bad_raise = [(0, 3, 0, 2, "raise 3->5"), (1, 5, 0, 3, "")]
    assert any("raise with dtof=2" in p for p in check_hysteresis(bad_raise, policy))
    missed = [(0, 3, 1, 1, ""), (1, 3, 0, 2, "")]
    assert check_hysteresis(missed, policy)
    jump = [(0, 3, 0, 2, ""), (1, 5, 0, 3, "")]
    assert check_hysteresis(jump, policy)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    rate=st.floats(0, 0.05),
    burst_len=st.integers(1, 8),
    window=st.integers(1, 40),
    width=st.integers(1, 3),
)
def test_controller_invariants(seed, rate, burst_len, window, width):
    policy = RedundancyPolicy(calm_window=window)
    length = 2000
    sched = burst_profile(seed, length, rate, burst_len, max_width=width)
    result = run_experiment(sched, policy, length)
    assert sum(result.histogram.values()) == length
    assert set(result.histogram) <= set(policy.levels())
    for e in result.events.values():
        if e.kind != "saturated":
            assert abs(e.n_after - e.n_before) == policy.step
    assert check_hysteresis(result.rows(), policy) == []
