"""Scenario files, deterministic experiment runs and replay checks."""

from __future__ import annotations

import configparser
import filecmp
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from . import hwprobe
from .alpha import AlphaConfig
from .assumptions import Assumption, AssumptionRegistry, BindingTime, Syndrome
from .faults import FaultEntry, FaultClass, InjectionSchedule, burst_profile, parse_schedule, transient_profile
from .patterns import run_pattern_experiment
from .redundancy import LOWER, RAISE, RedundancyPolicy, run_experiment

KINDS = ("redundancy_experiment", "pattern_experiment", "probe_run")
SECTIONS = ("scenario", "faults", "redundancy", "alpha", "pattern", "probe")
_TOP = "top-level"  # keys written before any section header


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


KEYS: dict[str, dict[str, Callable[[str], Any]]] = {
    "redundancy_experiment": {
        "burst_rate": float, "burst_len": int, "max_width": int, "schedule": str,
        "n_min": int, "n_max": int, "raise_threshold": int, "calm_window": int,
        "step": int, "calm_slack": int,
    },
    "pattern_experiment": {
        "decay": float, "threshold": float, "strict": _bool, "max_retries": int,
        "component": str, "permanent_onset": int, "transient_rate": float,
        "min_gap": int, "schedule": str, "secondary_shares_faults": _bool,
    },
    "probe_run": {"inventory": str, "kb": str, "methods": str, "default": str},
}
OUTPUTS = {
    "redundancy_experiment": ("trace.csv", "histogram.csv", "clashes.csv"),
    "pattern_experiment": ("trace.csv", "events.log", "clashes.csv"),
    "probe_run": ("report.csv", "clashes.csv"),
}


class ScenarioError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class Scenario:
    kind: str
    seed: int = 0
    length: int = 0
    params: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def get(self, key, default=None):
        return self.params.get(key, default)

    def path(self, key) -> Path:
        return self.base_dir / self.params[key]

    @property
    def outputs(self) -> tuple[str, ...]:
        return OUTPUTS[self.kind]


def parse_scenario(text: str, base_dir: Path | str = ".") -> Scenario:
    """Read flat ``key = value`` lines, optionally grouped under ``[section]`` headers.

    Sections are for readability only; every key lives in one namespace.
    """
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#", ";")
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_TOP}]\n" + text)
    except configparser.DuplicateSectionError as exc:
        raise ScenarioError(exc.section, "section appears twice") from None
    except configparser.DuplicateOptionError as exc:
        raise ScenarioError(exc.option, "key appears twice") from None
    except configparser.Error as exc:
        raise ScenarioError("syntax", str(exc).splitlines()[0]) from None

    raw: dict[str, str] = {}
    for section in parser.sections():
        if section != _TOP and section not in SECTIONS:
            raise ScenarioError(section, f"unknown section, expected one of {', '.join(SECTIONS)}")
        for key, value in parser.items(section):
            if key in raw:
                raise ScenarioError(key, "key appears in more than one section")
            raw[key] = value

    kind = raw.pop("kind", None)
    if kind is None:
        raise ScenarioError("kind", "missing")
    if kind not in KINDS:
        raise ScenarioError("kind", f"unknown kind {kind!r}, expected one of {', '.join(KINDS)}")
    allowed = KEYS[kind]
    scenario = Scenario(kind, base_dir=Path(base_dir))
    for key, value in raw.items():
        if key in ("seed", "length"):
            conv = int
        elif key in allowed:
            conv = allowed[key]
        else:
            raise ScenarioError(key, f"not a valid key for {kind}")
        try:
            parsed = conv(value)
        except ValueError:
            raise ScenarioError(key, f"invalid value {value!r}") from None
        if key == "seed":
            scenario.seed = parsed
        elif key == "length":
            scenario.length = parsed
        else:
            scenario.params[key] = parsed
    if kind != "probe_run" and scenario.length <= 0:
        raise ScenarioError("length", "must be a positive integer")
    if kind == "probe_run":
        for key in ("inventory", "kb", "methods"):
            if key not in scenario.params:
                raise ScenarioError(key, "missing")
    return scenario


def load_scenario(path: Path | str) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), path.parent)


def _load_schedule(scenario: Scenario) -> Optional[InjectionSchedule]:
    if "schedule" not in scenario.params:
        return None
    try:
        return parse_schedule(scenario.path("schedule").read_text(), scenario.seed)
    except (OSError, ValueError) as exc:
        raise ScenarioError("schedule", str(exc)) from None


def _redundancy(scenario: Scenario) -> dict[str, str]:
    keys = ("n_min", "n_max", "raise_threshold", "calm_window", "step", "calm_slack")
    try:
        policy = RedundancyPolicy(**{k: scenario.params[k] for k in keys if k in scenario.params})
    except ValueError as exc:
        raise ScenarioError("redundancy", str(exc)) from None
    schedule = _load_schedule(scenario)
    if schedule is None:
        try:
            schedule = burst_profile(
                scenario.seed,
                scenario.length,
                scenario.get("burst_rate", 0.0),
                scenario.get("burst_len", 5),
                targets=[f"r{i}" for i in range(policy.n_min)],
                max_width=scenario.get("max_width", min(2, policy.n_min)),
            )
        except ValueError as exc:
            raise ScenarioError("faults", str(exc)) from None
    result = run_experiment(schedule, policy, scenario.length)

    registry = AssumptionRegistry()
    registry.register(
        Assumption(
            "a(r)",
            "Degree of employed redundancy is r",
            BindingTime.RUN,
            policy.n_min,
            syndrome_tag=Syndrome.BOULDING,
        )
    )
    for t in sorted(result.events):
        if result.events[t].kind in (RAISE, LOWER):
            registry.observe("a(r)", result.events[t].n_after, t)
    return {
        "trace.csv": result.trace_csv(),
        "histogram.csv": result.histogram_csv(),
        "clashes.csv": registry.clashes_csv(),
    }


def _pattern(scenario: Scenario) -> dict[str, str]:
    component = scenario.get("component", "c3")
    try:
        config = AlphaConfig(
            scenario.get("decay", 0.5), scenario.get("threshold", 3.0), scenario.get("strict", True)
        )
    except ValueError as exc:
        raise ScenarioError("alpha", str(exc)) from None
    schedule = _load_schedule(scenario)
    if schedule is None:
        try:
            schedule = transient_profile(
                scenario.seed,
                scenario.length,
                scenario.get("transient_rate", 0.0),
                scenario.get("min_gap", 4),
                component,
            )
        except ValueError as exc:
            raise ScenarioError("faults", str(exc)) from None
    if "permanent_onset" in scenario.params:
        onset = scenario.params["permanent_onset"]
        if onset < 0:
            raise ScenarioError("permanent_onset", "must be non-negative")
        extra = FaultEntry(onset, component, FaultClass.PERMANENT)
        schedule = InjectionSchedule(schedule.entries + (extra,), schedule.seed)
    try:
        run = run_pattern_experiment(
            schedule,
            scenario.length,
            config,
            component,
            scenario.get("max_retries", 10),
            scenario.get("secondary_shares_faults", False),
        )
    except ValueError as exc:
        raise ScenarioError("pattern", str(exc)) from None
    return {
        "trace.csv": run.trace_csv(),
        "events.log": run.events_log(),
        "clashes.csv": run.registry.clashes_csv(),
    }


def probe_outputs(
    inventory: str, kb_text: str, methods_text: str, default: str = "f4"
) -> tuple[list[hwprobe.ProbeRow], AssumptionRegistry]:
    modules = hwprobe.parse_inventory(inventory)
    kb = hwprobe.KnowledgeBase.from_text(kb_text, default)
    methods = hwprobe.parse_methods(methods_text)
    rows = hwprobe.probe(modules, kb, methods)
    registry = AssumptionRegistry()
    for row in rows:
        # builds default to the benign memory assumption until probed
        aid = f"memory:{row.slot}"
        registry.register(
            Assumption(
                aid,
                hwprobe.FAILURE_ASSUMPTIONS["f0"].text,
                BindingTime.COMPILE,
                "f0",
                syndrome_tag=Syndrome.HIDDEN_INTELLIGENCE,
            )
        )
        registry.observe(aid, row.behavior, 0, handled=row.method is not None)
    return rows, registry


def _probe(scenario: Scenario) -> tuple[dict[str, str], int]:
    texts = {}
    for key in ("inventory", "kb", "methods"):
        try:
            texts[key] = scenario.path(key).read_text()
        except OSError as exc:
            raise ScenarioError(key, str(exc)) from None
    try:
        rows, registry = probe_outputs(
            texts["inventory"], texts["kb"], texts["methods"], scenario.get("default", "f4")
        )
    except hwprobe.ProbeError as exc:
        raise ScenarioError("probe", str(exc)) from None
    status = 0 if all(r.method is not None for r in rows) else 2
    return {"report.csv": hwprobe.report_csv(rows), "clashes.csv": registry.clashes_csv()}, status


def execute(scenario: Scenario) -> tuple[dict[str, str], int]:
    """All output files of a scenario as ``{name: text}`` plus the exit status."""
    if scenario.kind == "redundancy_experiment":
        return _redundancy(scenario), 0
    if scenario.kind == "pattern_experiment":
        return _pattern(scenario), 0
    return _probe(scenario)


def run(scenario: Scenario, out_dir: Path | str) -> int:
    outputs, status = execute(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        (out / name).write_text(text, newline="")
    return status


class MissingOutputsError(FileNotFoundError):
    pass


def replay_check(scenario: Scenario, out_dir: Path | str) -> tuple[bool, list[str]]:
    """Re-run ``scenario`` and compare with ``out_dir`` byte for byte.

    Returns ``(identical, differing_file_names)``.
    """
    out = Path(out_dir)
    missing = [name for name in scenario.outputs if not (out / name).is_file()]
    if missing:
        raise MissingOutputsError(f"missing outputs in {out}: {', '.join(missing)}")
    with tempfile.TemporaryDirectory() as tmp:
        run(scenario, tmp)
        differing = [
            name
            for name in scenario.outputs
            if not filecmp.cmp(out / name, Path(tmp) / name, shallow=False)
        ]
    return not differing, differing
