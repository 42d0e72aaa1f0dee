import itertools

import pytest
from hypothesis import given, strategies as st

from aft import alpha as ac
from aft.alpha import AlphaConfig, AlphaCountState, Classification


def fold(errors, config):
    state = AlphaCountState()
    for e in errors:
        state = ac.step(state, config, e)
    return state


def test_four_consecutive_errors_latch_at_threshold_three():
    config = AlphaConfig(decay=0.5, threshold=3.0)
    states = list(ac.run([True] * 4, config))
    assert [s.alpha for s in states] == [1.0, 2.0, 3.0, 4.0]
    assert [s.latched for s in states] == [False, False, False, True]
    assert states[-1].classification is Classification.PERMANENT_OR_INTERMITTENT


def test_quiet_step_decays():
    state = ac.step(AlphaCountState(2.0), AlphaConfig(decay=0.5), False)
    assert state == AlphaCountState(1.0, False)
    assert state.classification is Classification.BENIGN


def test_alternating_errors_stay_bounded():
    config = AlphaConfig(decay=0.5, threshold=3.0)
    state = AlphaCountState()
    # independent oracle: the bare recurrence
    a, peak = 0.0, 0.0
    for i in range(1_000_000):
        err = i % 2 == 0
        a = a + 1.0 if err else a * 0.5
        peak = max(peak, a)
        state = ac.step(state, config, err)
        assert not state.latched
    assert peak <= 2.0
    assert state.alpha == a


@pytest.mark.parametrize("decay,threshold", [(1.5, 3.0), (-0.1, 3.0), (0.5, 0.0), (0.5, -1.0)])
def test_invalid_config(decay, threshold):
    with pytest.raises(ValueError):
        AlphaConfig(decay, threshold)


def test_reset():
    latched = fold([True] * 5, AlphaConfig())
    assert latched.latched
    assert ac.reset(latched) == AlphaCountState()
    assert ac.reset(AlphaCountState()) == AlphaCountState()
    assert ac.step(ac.reset(latched), AlphaConfig(), True) == AlphaCountState(1.0, False)


def test_non_strict_crossing():
    states = list(ac.run([True] * 3, AlphaConfig(threshold=3.0, strict=False)))
    assert states[-1].latched


def test_no_decay_keeps_alpha():
    config = AlphaConfig(decay=1.0, threshold=3.0)
    assert fold([True, False, True, False, True, False, True], config).latched


def test_full_decay_exhaustive():
    """With decay 0 alpha is the length of the current error run."""
    config = AlphaConfig(decay=0.0, threshold=3.0)
    for length in range(13):
        for bits in itertools.product((False, True), repeat=length):
            longest = max((len(list(g)) for k, g in itertools.groupby(bits) if k), default=0)
            assert fold(bits, config).latched == (longest >= 4), bits


errors = st.lists(st.booleans(), max_size=60)
configs = st.builds(AlphaConfig, st.floats(0, 1), st.floats(0.1, 10))


@given(errors, configs)
def test_zero_errors_never_latch(history, config):
    assert not fold([False] * len(history), config).latched


@given(errors, configs, st.integers(0, 60))
def test_one_more_error_never_lowers_alpha(history, config, pos):
    pos = min(pos, len(history))
    base = history[:pos] + [False] + history[pos:]
    more = history[:pos] + [True] + history[pos:]
    assert fold(more, config).alpha >= fold(base, config).alpha


@given(errors, configs)
def test_latch_absorbing_and_alpha_nonnegative(history, config):
    seen = False
    for state in ac.run(history, config):
        assert state.alpha >= 0
        assert state.classification is (
            Classification.PERMANENT_OR_INTERMITTENT if state.latched else Classification.BENIGN
        )
        if seen:
            assert state.latched
        seen = state.latched
