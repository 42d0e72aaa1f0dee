"""Autonomic dimensioning of a replication-and-voting farm.

After every voting round the controller looks at the round's distance to
failure: a critically low value raises the replica count by one level,
while a long enough streak of calm rounds lowers it by one level.
"""

from __future__ import annotations

import csv
import io
from array import array
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .faults import InjectionSchedule
from .voting import VoteRound, majority_bar, vote

RAISE = "raise"
LOWER = "lower"
SATURATED = "saturated"


@dataclass(frozen=True)
class RedundancyPolicy:
    n_min: int = 3
    n_max: int = 9
    raise_threshold: int = 1
    calm_window: int = 1000
    step: int = 2
    calm_slack: int = 0  # a round is calm when dtof >= ceil(n/2) - calm_slack

    def __post_init__(self):
        if self.n_min < 3 or self.n_min % 2 == 0 or self.n_max % 2 == 0:
            raise ValueError(f"n_min and n_max must be odd and >= 3, got {self.n_min}, {self.n_max}")
        if self.n_min > self.n_max:
            raise ValueError(f"n_min {self.n_min} exceeds n_max {self.n_max}")
        if self.step <= 0 or self.step % 2:
            raise ValueError(f"step must be a positive even integer, got {self.step}")
        if (self.n_max - self.n_min) % self.step:
            raise ValueError("n_max - n_min must be a multiple of step")
        if self.calm_window < 1:
            raise ValueError(f"calm_window must be positive, got {self.calm_window}")
        if self.calm_slack < 0:
            raise ValueError(f"calm_slack must be non-negative, got {self.calm_slack}")

    def levels(self) -> list[int]:
        return list(range(self.n_min, self.n_max + 1, self.step))

    def is_calm(self, n: int, dtof: int) -> bool:
        return dtof >= majority_bar(n) - self.calm_slack


@dataclass(frozen=True)
class Event:
    t: int
    kind: str
    n_before: int
    n_after: int

    def __str__(self):
        if self.kind == SATURATED:
            return f"{SATURATED} {self.n_before}"
        return f"{self.kind} {self.n_before}->{self.n_after}"


@dataclass(frozen=True)
class ControllerState:
    n: int
    calm_streak: int = 0
    history: tuple[Event, ...] = ()  # raise/lower transitions only
    last_event: Optional[Event] = None  # what the most recent round triggered


class RedundancyMismatch(ValueError):
    pass


def react(state: ControllerState, policy: RedundancyPolicy, rnd: VoteRound, t: int) -> ControllerState:
    """Return the controller state after observing one voting round at step ``t``."""
    n = state.n
    if rnd.n != n:
        raise RedundancyMismatch(f"round has {rnd.n} votes but the farm runs {n} replicas")
    if rnd.dtof <= policy.raise_threshold:
        if n < policy.n_max:
            event = Event(t, RAISE, n, n + policy.step)
            return ControllerState(event.n_after, 0, state.history + (event,), event)
        return ControllerState(n, 0, state.history, Event(t, SATURATED, n, n))
    if not policy.is_calm(n, rnd.dtof):
        return ControllerState(n, 0, state.history)
    streak = state.calm_streak + 1
    if streak >= policy.calm_window and n > policy.n_min:
        event = Event(t, LOWER, n, n - policy.step)
        return ControllerState(event.n_after, 0, state.history + (event,), event)
    return ControllerState(n, streak, state.history)


def replica_votes(n: int, faulty: Iterable[int], golden=0) -> list:
    """Outputs of ``n`` replicas; each faulty replica emits its own corrupted value."""
    bad = set(faulty)
    return [("corrupt", i) if i in bad else golden for i in range(n)]


def _replica_index(target: str) -> Optional[int]:
    if target.startswith("r") and target[1:].isdigit():
        return int(target[1:])
    return None


@dataclass
class ExperimentResult:
    """Columnar trace of a redundancy experiment; row ``t`` is the round at step ``t``."""

    policy: RedundancyPolicy
    n: array = field(default_factory=lambda: array("b"))
    m: array = field(default_factory=lambda: array("b"))
    dtof: array = field(default_factory=lambda: array("b"))
    events: dict = field(default_factory=dict)
    histogram: Counter = field(default_factory=Counter)

    @property
    def length(self) -> int:
        return len(self.n)

    def rows(self) -> Iterator[tuple[int, int, int, int, str]]:
        events = self.events
        for t, (n, m, d) in enumerate(zip(self.n, self.m, self.dtof)):
            ev = events.get(t)
            yield t, n, m, d, str(ev) if ev else ""

    def failures(self) -> list[int]:
        """Steps whose round found no majority."""
        return [t for t, d in enumerate(self.dtof) if d == 0]

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,n,m,dtof,event\n")
        buf.writelines(f"{t},{n},{m},{d},{ev}\n" for t, n, m, d, ev in self.rows())
        return buf.getvalue()

    def histogram_csv(self) -> str:
        lines = ["r,steps"]
        lines += [f"{r},{self.histogram.get(r, 0)}" for r in self.policy.levels()]
        return "\n".join(lines) + "\n"


def run_experiment(
    schedule: InjectionSchedule, policy: RedundancyPolicy, length: int
) -> ExperimentResult:
    """Drive a voting farm through ``length`` steps of injected faults.

    A fault on target ``r<i>`` corrupts replica ``i`` while it is active and
    while the farm runs more than ``i`` replicas. The farm starts at
    ``policy.n_min`` replicas.
    """
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    result = ExperimentResult(policy)
    state = ControllerState(policy.n_min)
    hot = set(schedule.active_steps())
    has_permanent = any(e.fault_class.value == "permanent" for e in schedule.entries)
    for t in range(length):
        n = state.n
        faulty = ()
        if has_permanent or t in hot:
            faulty = {
                i for target, _ in schedule.faults_at(t)
                if (i := _replica_index(target)) is not None and i < n
            }
        rnd = vote(replica_votes(n, faulty))
        result.n.append(n)
        result.m.append(rnd.m)
        result.dtof.append(rnd.dtof)
        result.histogram[n] += 1
        state = react(state, policy, rnd, t)
        if state.last_event is not None:
            result.events[t] = state.last_event
    return result


def read_trace_csv(text: str) -> list[tuple[int, int, int, int, str]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ["t", "n", "m", "dtof", "event"]:
        raise ValueError(f"unexpected trace header {header}")
    return [(int(t), int(n), int(m), int(d), ev) for t, n, m, d, ev in reader]


def check_hysteresis(rows: Iterable[tuple], policy: RedundancyPolicy) -> list[str]:
    """Scan a ``t,n,m,dtof,event`` trace and list every hysteresis violation.

    Decreases must follow exactly ``calm_window`` consecutive calm rounds
    counted since the last reset, increases must follow a round at or below
    the raise threshold, and ``n`` must only change where an event says so.
    """
    problems = []
    streak = 0
    expected_n = None
    for t, n, m, d, ev in rows:
        if expected_n is not None and n != expected_n:
            problems.append(f"t={t}: n={n} but previous event left n={expected_n}")
        if n % 2 == 0 or not policy.n_min <= n <= policy.n_max:
            problems.append(f"t={t}: n={n} outside the admissible odd range")
        calm = policy.is_calm(n, d)
        low = d <= policy.raise_threshold
        streak = streak + 1 if calm and not low else 0
        kind = ev.split(" ", 1)[0] if ev else ""
        if kind == RAISE:
            if not low:
                problems.append(f"t={t}: raise with dtof={d} above threshold")
            expected_n = int(ev.split("->")[1])
            if expected_n != n + policy.step:
                problems.append(f"t={t}: raise to {expected_n} is not a single step")
        elif kind == LOWER:
            if streak != policy.calm_window:
                problems.append(f"t={t}: lower after {streak} calm rounds, expected {policy.calm_window}")
            expected_n = int(ev.split("->")[1])
            if expected_n != n - policy.step:
                problems.append(f"t={t}: lower to {expected_n} is not a single step")
            streak = 0
        else:
            if kind == SATURATED:
                streak = 0
            elif low and n < policy.n_max:
                problems.append(f"t={t}: dtof={d} at n={n} without a raise")
            elif streak >= policy.calm_window and n > policy.n_min:
                problems.append(f"t={t}: {streak} calm rounds at n={n} without a lower")
            expected_n = n
    return problems
