"""Reflective component DAG with switchable fault-tolerance patterns.

A protected component starts under the redoing pattern (D1): a wrapper
that repeats the computation on failure, with a watchdog feeding every
failed attempt into the component's alpha-count channel. When the channel
latches, a switch request is raised and the reconfiguration agent injects
the 2-version reconfiguration pattern (D2): a primary replica backed by a
secondary that takes over within the same step.
"""

from __future__ import annotations

import io
import operator
from array import array
from dataclasses import dataclass, field
from enum import Enum
from itertools import accumulate, chain, repeat
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping, Optional

from . import alpha as ac
from .assumptions import Assumption, AssumptionRegistry, BindingTime, Syndrome
from .faults import FaultClass, InjectionSchedule


class NodeKind(Enum):
    PLAIN = "plain"
    REDOING_WRAPPER = "redoing_wrapper"
    PRIMARY_REPLICA = "primary_replica"
    SECONDARY_REPLICA = "secondary_replica"
    VOTER = "voter"
    WATCHDOG = "watchdog"


class DagError(ValueError):
    pass


class UnknownComponentError(DagError, KeyError):
    def __str__(self):
        return self.args[0]


class CycleCreatedError(DagError):
    pass


@dataclass(frozen=True)
class ComponentNode:
    id: str
    kind: NodeKind = NodeKind.PLAIN
    max_retries: Optional[int] = None
    protects: Optional[str] = None  # channel name for primary/secondary replicas

    def __post_init__(self):
        if self.kind is NodeKind.REDOING_WRAPPER:
            if self.max_retries is None or self.max_retries < 1:
                raise DagError(f"redoing wrapper {self.id!r} needs a positive max_retries")
        elif self.max_retries is not None:
            raise DagError(f"max_retries only applies to redoing wrappers, not {self.id!r}")

    @property
    def channel(self) -> Optional[str]:
        if self.kind is NodeKind.REDOING_WRAPPER:
            return self.id
        if self.kind in (NodeKind.PRIMARY_REPLICA, NodeKind.SECONDARY_REPLICA):
            return self.protects or self.id
        return None

    def annotation(self) -> str:
        text = f"{self.id}: {self.kind.value}"
        if self.max_retries is not None:
            text += f" retries={self.max_retries}"
        if self.protects is not None:
            text += f" protects={self.protects}"
        return text


class DagSnapshot:
    """An acyclic component graph. Treat instances as immutable values."""

    def __init__(self, nodes: Iterable[ComponentNode], edges: Iterable[tuple[str, str]] = ()):
        self.nodes: dict[str, ComponentNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise DagError(f"duplicate component id {node.id!r}")
            self.nodes[node.id] = node
        self.edges: frozenset[tuple[str, str]] = frozenset(edges)
        for a, b in self.edges:
            for end in (a, b):
                if end not in self.nodes:
                    raise UnknownComponentError(f"edge {a} -> {b} names unknown component {end!r}")
        self._order = _toposort(self.nodes, self.edges)
        # keyed by kind value: enum hashing is slow on the stepping path
        self._by_kind: dict[str, list[ComponentNode]] = {kind.value: [] for kind in NodeKind}
        self._patterns: dict[str, str] = {}
        for n in self._order:
            node = self.nodes[n]
            self._by_kind[node.kind.value].append(node)
            if node.channel is not None and node.kind is not NodeKind.SECONDARY_REPLICA:
                self._patterns[node.channel] = (
                    "D1" if node.kind is NodeKind.REDOING_WRAPPER else "D2"
                )

    def __eq__(self, other):
        if not isinstance(other, DagSnapshot):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self):
        return f"DagSnapshot({sorted(self.nodes)}, {len(self.edges)} edges)"

    def __contains__(self, node_id):
        return node_id in self.nodes

    def topological_order(self) -> list[str]:
        return list(self._order)

    def predecessors(self, node_id: str) -> set[str]:
        return {a for a, b in self.edges if b == node_id}

    def successors(self, node_id: str) -> set[str]:
        return {b for a, b in self.edges if a == node_id}

    def sources(self) -> list[str]:
        targets = {b for _, b in self.edges}
        return [n for n in self._order if n not in targets]

    def sinks(self) -> list[str]:
        origins = {a for a, _ in self.edges}
        return [n for n in self._order if n not in origins]

    def of_kind(self, kind: NodeKind) -> list[ComponentNode]:
        return list(self._by_kind[kind.value])

    def pattern_of(self, channel: str) -> Optional[str]:
        return self._patterns.get(channel)

    def to_text(self) -> str:
        lines = [self.nodes[n].annotation() for n in sorted(self.nodes)]
        lines += [f"{a} -> {b}" for a, b in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DagSnapshot":
        nodes, edges = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" in line:
                a, b = (part.strip() for part in line.split("->", 1))
                edges.append((a, b))
                continue
            if ":" not in line:
                raise DagError(f"line {lineno}: expected 'id: kind' or 'from -> to', got {raw!r}")
            node_id, rest = (part.strip() for part in line.split(":", 1))
            kind, *attrs = rest.split()
            extra = dict(a.split("=", 1) for a in attrs)
            nodes.append(
                ComponentNode(
                    node_id,
                    NodeKind(kind),
                    int(extra["retries"]) if "retries" in extra else None,
                    extra.get("protects"),
                )
            )
        return cls(nodes, edges)


def _toposort(nodes, edges) -> list[str]:
    graph = {n: set() for n in sorted(nodes)}
    for a, b in edges:
        graph[b].add(a)
    sorter = TopologicalSorter(graph)
    try:
        return list(sorter.static_order())
    except CycleError as exc:
        raise CycleCreatedError(f"component graph has a cycle through {exc.args[1]}") from None


def redoing_pattern(component: str = "c3", max_retries: int = 10) -> DagSnapshot:
    return DagSnapshot([ComponentNode(component, NodeKind.REDOING_WRAPPER, max_retries)])


def reconfiguration_pattern(component: str = "c3") -> DagSnapshot:
    return DagSnapshot(
        [
            ComponentNode(f"{component}.1", NodeKind.PRIMARY_REPLICA, protects=component),
            ComponentNode(f"{component}.2", NodeKind.SECONDARY_REPLICA, protects=component),
        ]
    )


def pipeline(component: str = "c3", max_retries: int = 10) -> DagSnapshot:
    """Four-stage pipeline whose third stage runs under the redoing pattern."""
    return DagSnapshot(
        [
            ComponentNode("c1"),
            ComponentNode("c2"),
            ComponentNode(component, NodeKind.REDOING_WRAPPER, max_retries),
            ComponentNode("c4"),
            ComponentNode(f"wd.{component}", NodeKind.WATCHDOG),
        ],
        [("c1", "c2"), ("c2", component), (component, "c4"), (component, f"wd.{component}")],
    )


def inject(current: DagSnapshot, replacement: DagSnapshot, at: str) -> DagSnapshot:
    """Replace component ``at`` by the ``replacement`` fragment.

    Every edge entering ``at`` is redirected to each source of the fragment
    and every edge leaving ``at`` now leaves each sink of the fragment.
    Fragment nodes whose ids already exist elsewhere in ``current`` must be
    identical to them and are merged.
    """
    if at not in current.nodes:
        raise UnknownComponentError(f"no component {at!r} in the current snapshot")
    nodes = {k: v for k, v in current.nodes.items() if k != at}
    for node in replacement.nodes.values():
        if node.id in nodes and nodes[node.id] != node:
            raise DagError(f"fragment redefines existing component {node.id!r}")
        nodes[node.id] = node
    edges = {(a, b) for a, b in current.edges if at not in (a, b)}
    edges |= replacement.edges
    edges |= {(p, s) for p in current.predecessors(at) for s in replacement.sources()}
    edges |= {(s, q) for q in current.successors(at) for s in replacement.sinks()}
    return DagSnapshot(nodes.values(), edges)


@dataclass(frozen=True)
class EnvironmentAssumption:
    id: str
    text: str
    pattern: Optional[str]


ENVIRONMENT_ASSUMPTIONS = {
    "e0": EnvironmentAssumption("e0", "No faults shall be experienced", None),
    "e1": EnvironmentAssumption("e1", "The physical environment shall exhibit transient faults", "D1"),
    "e2": EnvironmentAssumption("e2", "The physical environment shall exhibit permanent faults", "D2"),
}

OK = "ok"
REDONE = "redone"
TAKEOVER = "takeover"
SWITCH_PENDING = "switch_pending"
FAILED = "failed"
UNPROTECTED = "unprotected_failure"
SUCCESSFUL = frozenset({OK, REDONE, TAKEOVER})
_RANK = {OK: 0, REDONE: 1, TAKEOVER: 2, SWITCH_PENDING: 3, FAILED: 4}


@dataclass(frozen=True)
class SwitchRequest:
    channel: str
    t: int = 0


@dataclass(slots=True)
class ChannelStep:
    outcome: str
    attempts: int = 1
    firings: list[float] = field(default_factory=list)  # alpha after each watchdog firing


@dataclass
class StepResult:
    channels: dict[str, ChannelStep]
    alpha: dict[str, ac.AlphaCountState]
    switch_requests: list[SwitchRequest]
    unprotected: list[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return not self.unprotected and all(c.outcome in SUCCESSFUL for c in self.channels.values())

    @property
    def outcome(self) -> str:
        if self.unprotected:
            return UNPROTECTED
        worst = OK
        for c in self.channels.values():
            if _RANK[c.outcome] > _RANK[worst]:
                worst = c.outcome
        return worst


def _hit(faults, names) -> Optional[FaultClass]:
    """Most persistent fault class hitting any of ``names``."""
    worst = None
    for target, cls in faults:
        if target not in names:
            continue
        if cls is FaultClass.PERMANENT:
            return cls
        if worst is None or cls is FaultClass.INTERMITTENT:
            worst = cls
    return worst


_FRESH = ac.AlphaCountState()


def execute_step(
    dag: DagSnapshot,
    faults,
    alpha: Mapping[str, ac.AlphaCountState],
    config: ac.AlphaConfig,
    t: int = 0,
    secondary_shares_faults: bool = False,
) -> StepResult:
    """Run the protected task once under the current pattern.

    A transient fault spoils only the first attempt of the step, while a
    permanent or intermittent fault spoils every attempt. Each failed
    attempt fires the watchdog once and adds one error to the channel's
    alpha count; a step with no failed attempt feeds one quiet observation.
    A redoing wrapper gives up early when its channel latches and asks for
    the reconfiguration pattern.
    """
    alpha = dict(alpha)
    channels: dict[str, ChannelStep] = {}
    requests = []
    nodes = dag.nodes
    unprotected = []
    if faults:
        unprotected = sorted(
            {target for target, _ in faults if target in nodes and nodes[target].kind is NodeKind.PLAIN}
        )
    step = ac.step

    for node in dag._by_kind["redoing_wrapper"]:
        ch = node.id
        state = alpha.get(ch, _FRESH)
        fault = _hit(faults, (ch,)) if faults else None
        if fault is None:
            alpha[ch] = step(state, config, False)
            channels[ch] = ChannelStep(OK)
            continue
        # a transient spoils one attempt, anything else spoils them all
        spoiled = 1 if fault is FaultClass.TRANSIENT else 1 + node.max_retries
        result = ChannelStep(FAILED, 0, [])
        for _ in range(spoiled):
            result.attempts += 1
            state = step(state, config, True)
            result.firings.append(state.alpha)
            if state.latched:
                result.outcome = SWITCH_PENDING
                requests.append(SwitchRequest(ch, t))
                break
        else:
            if spoiled <= node.max_retries:
                result.attempts += 1
                result.outcome = REDONE
        alpha[ch] = state
        channels[ch] = result

    for primary in dag._by_kind["primary_replica"]:
        ch = primary.channel
        state = alpha.get(ch, _FRESH)
        result = ChannelStep(OK)
        if not faults or _hit(faults, {ch, primary.id}) is None:
            state = step(state, config, False)
        else:
            state = step(state, config, True)
            result.firings.append(state.alpha)
            result.attempts = 2
            secondaries = [
                s for s in dag._by_kind["secondary_replica"] if s.channel == ch
            ]
            names = {s.id for s in secondaries} | ({ch} if secondary_shares_faults else set())
            if secondaries and _hit(faults, names) is None:
                result.outcome = TAKEOVER
            else:
                result.outcome = FAILED
        alpha[ch] = state
        channels[ch] = result

    return StepResult(channels, alpha, requests, unprotected)


class PatternSwitcher:
    """Reconfiguration agent owning the reflective DAG.

    Steps and injections are serialized: :meth:`assess_and_switch` runs
    between two :meth:`step` calls, never during one.
    """

    def __init__(
        self,
        dag: DagSnapshot,
        config: ac.AlphaConfig = ac.AlphaConfig(),
        registry: Optional[AssumptionRegistry] = None,
        secondary_shares_faults: bool = False,
    ):
        self.dag = dag
        self.config = config
        self.registry = registry if registry is not None else AssumptionRegistry()
        self.secondary_shares_faults = secondary_shares_faults
        self.alpha: dict[str, ac.AlphaCountState] = {}
        self.switched: set[str] = set()
        self.events: list[str] = []
        for node in dag.of_kind(NodeKind.REDOING_WRAPPER):
            self.alpha[node.id] = ac.AlphaCountState()
            self.registry.register(
                Assumption(
                    self.assumption_id(node.id),
                    ENVIRONMENT_ASSUMPTIONS["e1"].text,
                    BindingTime.RUN,
                    "transient",
                    syndrome_tag=Syndrome.HORNING,
                )
            )

    @staticmethod
    def assumption_id(channel: str) -> str:
        return f"e1:{channel}"

    def quiet_steps(self, k: int) -> dict[str, list[float]]:
        """Equivalent of ``k`` fault-free :meth:`step` calls.

        Returns each channel's alpha after every one of the ``k`` steps.
        Decay cannot raise alpha, so no channel can latch here.
        """
        decay = self.config.decay
        out = {}
        for ch, state in self.alpha.items():
            seq = list(accumulate(repeat(decay, k), operator.mul, initial=state.alpha))[1:]
            out[ch] = seq
            if seq:
                self.alpha[ch] = ac.AlphaCountState(seq[-1], state.latched)
        return out

    def step(self, faults, t: int) -> StepResult:
        old = self.alpha
        result = execute_step(self.dag, faults, old, self.config, t, self.secondary_shares_faults)
        for ch, state in result.alpha.items():
            if state.latched and not (ch in old and old[ch].latched):
                self.events.append(f"{t} latch {ch} alpha={state.alpha!r}")
        self.alpha = result.alpha
        return result

    def assess_and_switch(self, request: Optional[SwitchRequest], t: int = 0) -> DagSnapshot:
        """Inject the reconfiguration pattern for a latched channel, at most once."""
        if request is None:
            return self.dag
        ch = request.channel
        if ch in self.switched:
            self.events.append(f"{t} duplicate request {ch} ignored (already D2)")
            return self.dag
        self.dag = inject(self.dag, reconfiguration_pattern(ch), ch)
        self.switched.add(ch)
        self.events.append(f"{t} switch D1->D2 {ch}")
        aid = self.assumption_id(ch)
        if aid in self.registry:
            self.registry.observe(aid, "permanent", t)
        return self.dag


@dataclass
class PatternRun:
    """Columnar trace of a pattern experiment for one protected component."""

    component: str
    events: list[str]
    registry: AssumptionRegistry
    dag: DagSnapshot
    alpha: array = field(default_factory=lambda: array("d"))
    latched: bytearray = field(default_factory=bytearray)
    firings: array = field(default_factory=lambda: array("i"))
    outcomes: list[str] = field(default_factory=list)
    patterns: list[str] = field(default_factory=list)
    step_events: dict[int, str] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.outcomes)

    def rows(self):
        ch = self.component
        for t in range(self.length):
            yield (
                t, ch, self.alpha[t], self.latched[t], self.firings[t],
                self.outcomes[t], self.patterns[t], self.step_events.get(t, ""),
            )

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,channel,alpha,latched,firings,outcome,pattern,event\n")
        buf.writelines(
            f"{t},{ch},{a!r},{lat},{f},{o},{p},{ev}\n" for t, ch, a, lat, f, o, p, ev in self.rows()
        )
        return buf.getvalue()

    def events_log(self) -> str:
        return "".join(e + "\n" for e in self.events)


def run_pattern_experiment(
    schedule: InjectionSchedule,
    length: int,
    config: ac.AlphaConfig = ac.AlphaConfig(),
    component: str = "c3",
    max_retries: int = 10,
    secondary_shares_faults: bool = False,
) -> PatternRun:
    """Run the D1 pipeline for ``length`` steps, switching to D2 on demand."""
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    switcher = PatternSwitcher(
        pipeline(component, max_retries), config, secondary_shares_faults=secondary_shares_faults
    )
    run = PatternRun(component, switcher.events, switcher.registry, switcher.dag)
    first_permanent = min(
        (e.sim_time for e in schedule.entries if e.fault_class is FaultClass.PERMANENT),
        default=length,
    )
    hot = [t for t in schedule.active_steps() if t < min(first_permanent, length)]
    hot += range(first_permanent, length)
    # columns start out as quiet, unlatched steps; only hot steps are written
    pattern = switcher.dag.pattern_of(component)
    run.alpha = alphas = array("d", bytes(8 * length))
    run.latched = latched = bytearray(length)
    run.firings = firings = array("i", bytes(4 * length))
    run.outcomes = outcomes = [OK] * length
    run.patterns = patterns = [pattern] * length
    events = switcher.events
    faults_at = schedule.faults_at
    t = 0
    for t_hot in chain(hot, [length]):
        if t_hot > t:
            alphas[t:t_hot] = array("d", switcher.quiet_steps(t_hot - t)[component])
            if switcher.alpha[component].latched:
                latched[t:t_hot] = b"\x01" * (t_hot - t)
            t = t_hot
        if t == length:
            break
        n_events = len(events)
        result = switcher.step(faults_at(t), t)
        for request in result.switch_requests:
            switcher.assess_and_switch(request, t)
        state = result.alpha[component]
        alphas[t] = state.alpha
        latched[t] = state.latched
        firings[t] = len(result.channels[component].firings)
        outcomes[t] = result.outcome
        if len(events) > n_events:
            run.step_events[t] = ";".join(e.split(" ", 1)[1] for e in events[n_events:])
            if switcher.dag.pattern_of(component) != pattern:
                pattern = switcher.dag.pattern_of(component)
                patterns[t + 1:] = repeat(pattern, length - t - 1)
        t += 1
    run.dag = switcher.dag
    return run
