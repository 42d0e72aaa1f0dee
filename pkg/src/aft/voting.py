"""Replication-and-voting restoring organ with distance-to-failure."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Optional, Sequence


class VotingError(ValueError):
    pass


def majority_bar(n: int) -> int:
    """``ceil(n / 2)``, the dtof of a round reaching full consensus."""
    return (n + 1) // 2


def dtof(n: int, m: int, majority_exists: bool) -> int:
    """Distance to failure of a voting round with ``n`` replicas and ``m`` dissenters."""
    if n < 1:
        raise VotingError(f"replica count must be positive, got {n}")
    if not 0 <= m <= n:
        raise VotingError(f"dissent count must lie in [0, {n}], got {m}")
    if not majority_exists:
        return 0
    return majority_bar(n) - m


@dataclass(frozen=True)
class VoteRound:
    votes: tuple
    verdict: Optional[Any]
    m: int
    dtof: int

    @property
    def n(self) -> int:
        return len(self.votes)

    @property
    def majority(self) -> bool:
        return self.dtof > 0

    @property
    def consensus(self) -> bool:
        return self.dtof == majority_bar(self.n)


def vote(votes: Sequence[Hashable]) -> VoteRound:
    """Exact-equality majority vote over an odd number of replica outputs.

    ``m`` counts every vote that differs from the verdict, whether or not the
    dissenters agree among themselves. Without a strict majority the verdict
    is ``None``, ``m`` is the number of votes outside the largest group and
    ``dtof`` is 0.
    """
    votes = tuple(votes)
    n = len(votes)
    if n == 0 or n % 2 == 0:
        raise VotingError(f"voting needs an odd, non-zero number of votes, got {n}")
    value, count = Counter(votes).most_common(1)[0]
    if 2 * count > n:
        return VoteRound(votes, value, n - count, majority_bar(n) - (n - count))
    return VoteRound(votes, None, n - count, 0)


def rounds_csv(rounds: Iterable[tuple[int, VoteRound]]) -> str:
    """Render ``(t, round)`` pairs as ``t,n,m,majority,dtof`` CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "n", "m", "majority", "dtof"])
    for t, rnd in rounds:
        writer.writerow([t, rnd.n, rnd.m, int(rnd.majority), rnd.dtof])
    return buf.getvalue()
