"""Fault classes and deterministic injection schedules.

Randomness comes exclusively from :class:`random.Random` (MT19937) seeded
with the caller's integer seed, so a ``(seed, parameters)`` pair always
replays the same schedule.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class FaultClass(Enum):
    TRANSIENT = "transient"
    INTERMITTENT = "intermittent"
    PERMANENT = "permanent"


@dataclass(frozen=True, slots=True)
class FaultEntry:
    sim_time: int
    target: str
    fault_class: FaultClass
    duration: int = 1
    period: int = 2

    def __post_init__(self):
        if self.sim_time < 0:
            raise ValueError(f"fault onset must be non-negative, got {self.sim_time}")
        if self.duration < 1 or self.period < 1:
            raise ValueError("duration and period must be positive")

    def active_at(self, t: int) -> bool:
        if self.fault_class is FaultClass.PERMANENT:
            return t >= self.sim_time
        if self.fault_class is FaultClass.TRANSIENT:
            return t == self.sim_time
        offset = t - self.sim_time
        return 0 <= offset < self.duration and offset % self.period == 0


_NONE: frozenset = frozenset()


def _order(e: FaultEntry):
    return e.sim_time, e.target, e.fault_class._value_


class InjectionSchedule:
    """Immutable, time-sorted list of fault entries with a per-step index."""

    def __init__(self, entries: Iterable[FaultEntry] = (), seed: int = 0):
        self.entries: tuple[FaultEntry, ...] = tuple(sorted(entries, key=_order))
        self.seed = seed
        self._by_step: dict = defaultdict(set)
        permanent = {}
        for e in self.entries:
            if e.fault_class is FaultClass.PERMANENT:
                permanent.setdefault(e.target, e.sim_time)
            elif e.fault_class is FaultClass.TRANSIENT:
                self._by_step[e.sim_time].add((e.target, e.fault_class))
            else:
                for t in range(e.sim_time, e.sim_time + e.duration, e.period):
                    self._by_step[t].add((e.target, e.fault_class))
        self._by_step = {t: frozenset(active) for t, active in self._by_step.items()}
        self._perm_onsets = sorted((onset, target) for target, onset in permanent.items())
        self._perm_times = [onset for onset, _ in self._perm_onsets]

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, InjectionSchedule):
            return NotImplemented
        return self.entries == other.entries and self.seed == other.seed

    def __repr__(self):
        return f"InjectionSchedule({len(self.entries)} entries, seed={self.seed})"

    def faults_at(self, t: int) -> frozenset:
        """Set of ``(target, FaultClass)`` pairs active at step ``t``."""
        if t < 0:
            raise ValueError(f"step must be non-negative, got {t}")
        active = self._by_step.get(t, _NONE)
        k = bisect_right(self._perm_times, t)
        if not k:
            return active
        return active.union((target, FaultClass.PERMANENT) for _, target in self._perm_onsets[:k])

    def active_steps(self) -> list[int]:
        """Sorted steps touched by any non-permanent fault."""
        return sorted(self._by_step)

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            if e.fault_class is FaultClass.INTERMITTENT:
                lines.append(f"{e.sim_time},{e.target},{e.fault_class.value},{e.duration},{e.period}")
            else:
                lines.append(f"{e.sim_time},{e.target},{e.fault_class.value}")
        return "\n".join(lines) + ("\n" if lines else "")


def faults_at(schedule: InjectionSchedule, t: int) -> frozenset:
    return schedule.faults_at(t)


def parse_schedule(text: str, seed: int = 0) -> InjectionSchedule:
    """Parse ``t,target,class[,duration[,period]]`` lines; ``#`` starts a comment."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if not 3 <= len(fields) <= 5:
            raise ValueError(f"line {lineno}: expected 3 to 5 fields, got {raw!r}")
        try:
            entries.append(
                FaultEntry(
                    int(fields[0]),
                    fields[1],
                    FaultClass(fields[2]),
                    *(int(f) for f in fields[3:]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return InjectionSchedule(entries, seed)


def burst_profile(
    seed: int,
    length: int,
    burst_rate: float,
    burst_len: int,
    targets: Sequence[str] = ("r0", "r1", "r2"),
    max_width: int = 2,
) -> InjectionSchedule:
    """Generate clustered transient dissent.

    At every step a burst starts with probability ``burst_rate``. A burst
    picks between 1 and ``max_width`` distinct targets and corrupts each of
    them for ``burst_len`` consecutive steps (one transient entry per step),
    truncated at ``length``.
    """
    if not 0.0 <= burst_rate <= 1.0:
        raise ValueError(f"burst_rate must lie in [0, 1], got {burst_rate}")
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    if burst_len < 1:
        raise ValueError(f"burst_len must be positive, got {burst_len}")
    if not 1 <= max_width <= len(targets):
        raise ValueError(f"max_width must lie in [1, {len(targets)}], got {max_width}")
    rng = random.Random(seed)
    entries = []
    if burst_rate > 0.0:
        for start in range(length):
            if rng.random() >= burst_rate:
                continue
            width = rng.randint(1, max_width)
            hit = rng.sample(list(targets), width)
            for t in range(start, min(start + burst_len, length)):
                entries.extend(FaultEntry(t, target, FaultClass.TRANSIENT) for target in hit)
    # overlapping bursts may hit the same (t, target) twice
    return InjectionSchedule(set(entries), seed)


def transient_profile(
    seed: int, length: int, rate: float, min_gap: int = 4, target: str = "c3"
) -> InjectionSchedule:
    """Isolated transient faults on one target, at least ``min_gap`` steps apart."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    if min_gap < 1:
        raise ValueError(f"min_gap must be positive, got {min_gap}")
    draw = random.Random(seed).random
    # one draw per step, even inside a gap, keeps the stream aligned with time
    candidates = [t for t in range(length) if draw() < rate]
    entries = []
    next_allowed = 0
    for t in candidates:
        if t >= next_allowed:
            entries.append(FaultEntry(t, target, FaultClass.TRANSIENT))
            next_allowed = t + min_gap
    return InjectionSchedule(entries, seed)


def episodes(schedule: InjectionSchedule) -> list[tuple[int, int]]:
    """Maximal runs ``[start, stop)`` of consecutive steps with a non-permanent fault."""
    runs = []
    for t in schedule.active_steps():
        if runs and runs[-1][1] == t:
            runs[-1][1] = t + 1
        else:
            runs.append([t, t + 1])
    return [(a, b) for a, b in runs]
