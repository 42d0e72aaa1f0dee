import pytest
from hypothesis import given, settings, strategies as st

from aft.faults import (
    FaultClass,
    FaultEntry,
    InjectionSchedule,
    burst_profile,
    episodes,
    faults_at,
    parse_schedule,
    transient_profile,
)

P, T, I = FaultClass.PERMANENT, FaultClass.TRANSIENT, FaultClass.INTERMITTENT


def test_empty_schedule():
    sched = InjectionSchedule()
    assert faults_at(sched, 0) == frozenset()
    assert faults_at(sched, 12345) == frozenset()


def test_permanent_stays_active():
    sched = InjectionSchedule([FaultEntry(10, "c3", P)])
    assert faults_at(sched, 9) == frozenset()
    assert ("c3", P) in faults_at(sched, 10)
    assert ("c3", P) in faults_at(sched, 10_000)


def test_transient_single_step():
    sched = InjectionSchedule([FaultEntry(10, "c3", T)])
    assert faults_at(sched, 10) == {("c3", T)}
    assert faults_at(sched, 11) == frozenset()


def test_intermittent_periodic_window():
    sched = InjectionSchedule([FaultEntry(4, "c1", I, duration=7, period=3)])
    active = [t for t in range(20) if faults_at(sched, t)]
    assert active == [4, 7, 10]


def test_negative_step_rejected():
    with pytest.raises(ValueError):
        faults_at(InjectionSchedule(), -1)


def test_entries_sorted():
    sched = InjectionSchedule([FaultEntry(5, "b", T), FaultEntry(1, "a", T)])
    assert [e.sim_time for e in sched.entries] == [1, 5]


def test_schedule_text_round_trip():
    text = "# demo\n3,r1,transient\n10,c3,permanent  # stuck\n4,c1,intermittent,6,2\n"
    sched = parse_schedule(text)
    assert len(sched) == 3
    assert parse_schedule(sched.to_text()) == sched


@pytest.mark.parametrize("line", ["1,c3", "x,c3,transient", "1,c3,sticky", "1,c3,transient,0"])
def test_schedule_parse_errors(line):
    with pytest.raises(ValueError, match="line 1"):
        parse_schedule(line)


def test_burst_rate_zero_is_empty():
    assert len(burst_profile(3, 1000, 0.0, 5)) == 0


def test_burst_profile_deterministic():
    a = burst_profile(42, 5000, 0.01, 4)
    b = burst_profile(42, 5000, 0.01, 4)
    assert a == b and a.to_text() == b.to_text()
    assert burst_profile(43, 5000, 0.01, 4) != a


def test_burst_every_step_at_rate_one():
    sched = burst_profile(0, 3, 1.0, 1, max_width=1)
    # enumerated: one single-step burst starting at each of the three steps
    assert [e.sim_time for e in sched.entries] == [0, 1, 2]
    assert all(e.fault_class is T for e in sched.entries)


@pytest.mark.parametrize("rate", [-0.1, 1.5])
def test_burst_invalid_rate(rate):
    with pytest.raises(ValueError):
        burst_profile(0, 10, rate, 1)


def test_burst_invalid_length():
    with pytest.raises(ValueError):
        burst_profile(0, 0, 0.1, 1)


def test_transient_profile_respects_gap():
    sched = transient_profile(5, 20000, 0.3, min_gap=4)
    times = [e.sim_time for e in sched.entries]
    assert times and all(b - a >= 4 for a, b in zip(times, times[1:]))


def test_episodes_merge_adjacent_steps():
    sched = parse_schedule("3,r0,transient\n4,r1,transient\n9,r0,transient\n")
    assert episodes(sched) == [(3, 5), (9, 10)]


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    length=st.integers(1, 300),
    rate=st.floats(0, 1),
    burst_len=st.integers(1, 6),
)
def test_generated_schedules_obey_class_semantics(seed, length, rate, burst_len):
    sched = burst_profile(seed, length, rate, burst_len)
    scanned = {t: faults_at(sched, t) for t in range(length + 2)}
    for e in sched.entries:
        assert e.fault_class is T and 0 <= e.sim_time < length
        assert (e.target, T) in scanned[e.sim_time]
    assert sum(len(v) for v in scanned.values()) == len(sched)
    assert burst_profile(seed, length, rate, burst_len) == sched


@given(
    entries=st.lists(
        st.tuples(st.integers(0, 30), st.sampled_from(["a", "b"]), st.sampled_from(list(FaultClass)),
                  st.integers(1, 6), st.integers(1, 3)),
        max_size=8,
    )
)
def test_faults_at_matches_entry_semantics(entries):
    built = [FaultEntry(*e) for e in entries]
    sched = InjectionSchedule(built)
    for t in range(45):
        expected = {(e.target, e.fault_class) for e in built if e.active_at(t)}
        assert faults_at(sched, t) == expected
