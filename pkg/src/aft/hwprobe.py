"""Memory-module probing and failure-semantics-aware method selection.

Parses an ``lshw``-style memory inventory, looks every bank up in a
knowledge base of known failure behaviours, and picks the cheapest memory
access method that tolerates the behaviour found.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fnmatch import fnmatchcase
from typing import Iterable, Optional, Sequence


class ProbeError(ValueError):
    pass


class InventoryParseError(ProbeError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class NoToleratingMethodError(ProbeError):
    def __init__(self, behavior: str):
        super().__init__(f"no access method tolerates failure behaviour {behavior}")
        self.behavior = behavior


@dataclass(frozen=True)
class FailureAssumption:
    id: str
    text: str
    rank: int


FAILURE_ASSUMPTIONS = {
    f.id: f
    for f in (
        FailureAssumption("f0", "Memory is stable and unaffected by failures", 0),
        FailureAssumption(
            "f1", "Memory is affected by transient faults and CMOS-like failure behaviors", 1
        ),
        FailureAssumption(
            "f2", "Memory is affected by permanent stuck-at faults and CMOS-like failure behaviors", 2
        ),
        FailureAssumption(
            "f3",
            "Memory is affected by transient faults and SDRAM-like failure behaviors, including SEL",
            3,
        ),
        FailureAssumption(
            "f4",
            "Memory is affected by transient faults and SDRAM-like failure behaviors, "
            "including SEL and SEU",
            4,
        ),
    )
}


@dataclass(frozen=True)
class MemoryModuleDescriptor:
    slot: str
    description: str
    vendor: str
    serial: str
    size: int  # bytes
    width: int  # bits
    clock: int  # Hz

    def __post_init__(self):
        for name in ("size", "width", "clock"):
            if getattr(self, name) <= 0:
                raise ProbeError(f"{self.slot}: {name} must be positive")


_UNITS = {
    "": 1, "B": 1,
    "KiB": 2**10, "MiB": 2**20, "GiB": 2**30, "TiB": 2**40,
    "KB": 10**3, "MB": 10**6, "GB": 10**9, "TB": 10**12,
}
_HZ = {"Hz": 1, "KHz": 10**3, "kHz": 10**3, "MHz": 10**6, "GHz": 10**9}
_QUANTITY = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([A-Za-z]*)")
_REQUIRED = ("slot", "size", "width", "clock")


def _quantity(value: str, units: dict, key: str, lineno: int) -> int:
    match = _QUANTITY.match(value)
    if not match or match.group(2) not in units:
        raise InventoryParseError(f"cannot read {key} value {value!r}", lineno)
    return round(float(match.group(1)) * units[match.group(2)])


def _width(value: str, lineno: int) -> int:
    match = re.match(r"^\s*(\d+)\s*bits?\b", value)
    if not match:
        raise InventoryParseError(f"cannot read width value {value!r}", lineno)
    return int(match.group(1))


def parse_inventory(text: str) -> list[MemoryModuleDescriptor]:
    """One descriptor per ``*-bank`` block of an ``lshw`` memory listing.

    Sizes come back in bytes, widths in bits and clocks in Hz. Keys other
    than description, vendor, serial, slot, size, width and clock are ignored.
    """
    banks: list[tuple[int, dict]] = []
    current: Optional[dict] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*-"):
            current = None
            if line.startswith("*-bank"):
                current = {}
                banks.append((lineno, current))
            continue
        if current is None:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise InventoryParseError(f"expected 'key: value', got {line!r}", lineno)
        current[key.strip()] = (value.strip(), lineno)

    modules = []
    for header_line, fields in banks:
        missing = [k for k in _REQUIRED if k not in fields]
        if missing:
            raise InventoryParseError(
                f"bank block is missing required field(s) {', '.join(missing)}", header_line
            )
        size, size_line = fields["size"]
        width, width_line = fields["width"]
        clock, clock_line = fields["clock"]
        modules.append(
            MemoryModuleDescriptor(
                slot=fields["slot"][0],
                description=fields.get("description", ("", 0))[0],
                vendor=fields.get("vendor", ("", 0))[0],
                serial=fields.get("serial", ("", 0))[0],
                size=_quantity(size, _UNITS, "size", size_line),
                width=_width(width, width_line),
                clock=_quantity(clock, _HZ, "clock", clock_line),
            )
        )
    return modules


def _format_size(n: int) -> str:
    for unit in ("TiB", "GiB", "MiB", "KiB"):
        if n % _UNITS[unit] == 0:
            return f"{n // _UNITS[unit]}{unit}"
    return f"{n}B"


def _format_clock(hz: int) -> str:
    for unit in ("GHz", "MHz", "KHz"):
        if hz % _HZ[unit] == 0:
            return f"{hz // _HZ[unit]}{unit}"
    return f"{hz}Hz"


def serialize_inventory(modules: Iterable[MemoryModuleDescriptor]) -> str:
    lines = ["*-memory", "     description: System Memory"]
    for i, mod in enumerate(modules):
        lines += [
            f"   *-bank:{i}",
            f"        description: {mod.description}",
            f"        vendor: {mod.vendor}",
            f"        serial: {mod.serial}",
            f"        slot: {mod.slot}",
            f"        size: {_format_size(mod.size)}",
            f"        width: {mod.width} bits",
            f"        clock: {_format_clock(mod.clock)}",
        ]
    return "\n".join(lines) + "\n"


# serial is the most specific key; a lot pattern narrows to a batch of serials
_SPECIFICITY = {"serial": 4, "lot": 3, "description": 1, "vendor": 0}
_KB_KEYS = frozenset(_SPECIFICITY)


@dataclass(frozen=True)
class KnowledgeRecord:
    patterns: tuple[tuple[str, str], ...]
    behavior: str

    @property
    def specificity(self) -> int:
        keys = {k for k, _ in self.patterns}
        if "serial" in keys:
            return 4
        if "lot" in keys:
            return 3
        if {"vendor", "description"} <= keys:
            return 2
        return max(_SPECIFICITY[k] for k in keys)

    def matches(self, module: MemoryModuleDescriptor) -> bool:
        for key, pattern in self.patterns:
            value = module.serial if key == "lot" else getattr(module, key)
            if not fnmatchcase(value, pattern):
                return False
        return True


class KnowledgeBase:
    """Records of known failure behaviours for memory models, lots and parts."""

    def __init__(self, records: Iterable[KnowledgeRecord] = (), default: str = "f4"):
        if default not in FAILURE_ASSUMPTIONS:
            raise ProbeError(f"unknown default failure behaviour {default!r}")
        self.records = list(records)
        self.default = default

    def __len__(self):
        return len(self.records)

    @classmethod
    def from_text(cls, text: str, default: str = "f4") -> "KnowledgeBase":
        """Parse ``key=pattern[,key=pattern...] -> f_id`` lines; ``#`` comments."""
        records = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            lhs, arrow, behavior = line.rpartition("->")
            behavior = behavior.strip()
            if not arrow or behavior not in FAILURE_ASSUMPTIONS:
                raise ProbeError(f"knowledge base line {lineno}: expected 'key=pattern -> f<i>'")
            patterns = []
            for part in lhs.split(","):
                key, eq, pattern = part.partition("=")
                key = key.strip()
                if not eq or key not in _KB_KEYS:
                    raise ProbeError(f"knowledge base line {lineno}: bad selector {part.strip()!r}")
                patterns.append((key, pattern.strip()))
            records.append(KnowledgeRecord(tuple(patterns), behavior))
        return cls(records, default)


def assess(kb: KnowledgeBase, module: MemoryModuleDescriptor) -> FailureAssumption:
    """Failure behaviour of the most specific matching record, else the KB default.

    Equally specific matches resolve to the earliest record in the file.
    """
    best: Optional[KnowledgeRecord] = None
    for record in kb.records:
        if record.matches(module) and (best is None or record.specificity > best.specificity):
            best = record
    return FAILURE_ASSUMPTIONS[best.behavior if best else kb.default]


@dataclass(frozen=True)
class AccessMethod:
    id: str
    tolerates: frozenset
    cost: float

    def __post_init__(self):
        if self.cost < 0:
            raise ProbeError(f"method {self.id} has negative cost")


def parse_methods(text: str) -> list[AccessMethod]:
    """Parse ``M3: cost=5 tolerates=f0,f1,f3`` lines; ``#`` comments."""
    methods = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        attrs = dict(part.split("=", 1) for part in rest.split() if "=" in part)
        if not sep or "cost" not in attrs or "tolerates" not in attrs:
            raise ProbeError(f"methods line {lineno}: expected 'id: cost=<c> tolerates=<f,...>'")
        tolerates = frozenset(f.strip() for f in attrs["tolerates"].split(",") if f.strip())
        unknown = tolerates - FAILURE_ASSUMPTIONS.keys()
        if unknown:
            raise ProbeError(f"methods line {lineno}: unknown behaviour(s) {sorted(unknown)}")
        methods.append(AccessMethod(name.strip(), tolerates, float(attrs["cost"])))
    return methods


def select_method(methods: Sequence[AccessMethod], behavior: FailureAssumption | str) -> AccessMethod:
    """Cheapest method tolerating ``behavior``; equal costs fall back to the id."""
    if not methods:
        raise ProbeError("method catalogue is empty")
    fid = behavior if isinstance(behavior, str) else behavior.id
    able = [m for m in methods if fid in m.tolerates]
    if not able:
        raise NoToleratingMethodError(fid)
    able.sort(key=lambda m: (m.cost, m.id))
    return able[0]


@dataclass(frozen=True)
class ProbeRow:
    slot: str
    behavior: str
    method: Optional[AccessMethod]

    def csv(self) -> str:
        if self.method is None:
            return f"{self.slot},{self.behavior},,"
        return f"{self.slot},{self.behavior},{self.method.id},{self.method.cost:g}"


def probe(
    modules: Iterable[MemoryModuleDescriptor], kb: KnowledgeBase, methods: Sequence[AccessMethod]
) -> list[ProbeRow]:
    """Selection report: one row per module, ``method`` is None when nothing tolerates it."""
    rows = []
    for module in modules:
        behavior = assess(kb, module)
        try:
            method = select_method(methods, behavior)
        except NoToleratingMethodError:
            method = None
        rows.append(ProbeRow(module.slot, behavior.id, method))
    return rows


def report_csv(rows: Iterable[ProbeRow]) -> str:
    lines = ["slot,assumed_behavior,selected_method,cost"] + [r.csv() for r in rows]
    return "\n".join(lines) + "\n"
