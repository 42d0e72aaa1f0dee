import itertools
import math

import pytest
from hypothesis import given, strategies as st

from aft.voting import VotingError, dtof, majority_bar, rounds_csv, vote


def brute_force(votes):
    """Counting oracle kept free of the implementation's helpers."""
    n = len(votes)
    best, best_count = None, 0
    for candidate in set(votes):
        count = sum(1 for v in votes if v == candidate)
        if count > best_count:
            best, best_count = candidate, count
    if best_count * 2 > n:
        m = n - best_count
        return best, m, math.ceil(n / 2) - m
    return None, None, 0


def test_consensus_of_seven():
    rnd = vote(["A"] * 7)
    assert (rnd.verdict, rnd.m, rnd.dtof) == ("A", 0, 4)
    assert rnd.consensus


def test_four_three_split():
    rnd = vote(["A"] * 4 + ["B"] * 3)
    assert (rnd.verdict, rnd.m, rnd.dtof) == ("A", 3, 1)


def test_no_majority():
    rnd = vote(["A"] * 3 + ["B"] * 2 + ["C"] * 2)
    assert rnd.verdict is None and rnd.dtof == 0 and not rnd.majority


def test_dissenters_counted_even_when_they_agree():
    assert vote(["A", "A", "A", "B", "B"]).m == 2
    assert vote(["A", "A", "A", "B", "C"]).m == 2


@pytest.mark.parametrize("votes", [[], ["A", "B"], ["A"] * 4])
def test_even_or_empty_rejected(votes):
    with pytest.raises(VotingError):
        vote(votes)


@pytest.mark.parametrize("args,expected", [((7, 0, True), 4), ((3, 1, True), 1), ((9, 4, False), 0), ((9, 0, False), 0)])
def test_dtof_formula(args, expected):
    assert dtof(*args) == expected


def test_dtof_rejects_dissent_above_n():
    with pytest.raises(VotingError):
        dtof(3, 4, True)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_exhaustive_against_brute_force(n):
    for votes in itertools.product("abc", repeat=n):
        rnd = vote(votes)
        verdict, m, d = brute_force(votes)
        assert rnd.verdict == verdict and rnd.dtof == d
        if verdict is not None:
            assert rnd.m == m


def test_dtof_non_increasing_in_dissent():
    for n in (3, 5, 7, 9):
        values = [dtof(n, m, True) for m in range(majority_bar(n))]
        assert values == sorted(values, reverse=True)


@given(st.lists(st.sampled_from("xyz"), min_size=1, max_size=11).filter(lambda v: len(v) % 2), st.randoms())
def test_permutation_invariance(votes, rng):
    shuffled = list(votes)
    rng.shuffle(shuffled)
    a, b = vote(votes), vote(shuffled)
    assert (a.verdict, a.m, a.dtof) == (b.verdict, b.m, b.dtof)


def test_rounds_csv():
    text = rounds_csv([(0, vote("aaa")), (1, vote("abc"))])
    assert text == "t,n,m,majority,dtof\n0,3,0,1,2\n1,3,2,0,0\n"
