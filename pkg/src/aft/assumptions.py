"""Assumption variables, binding times and clash detection.

Every strategy in the toolkit reports into an :class:`AssumptionRegistry`:
a design-time hypothesis is registered with its assumed value, run-time
observations are matched against it, and each mismatch is appended to a
clash log that can be exported as CSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

ValueLiteral = Union[str, int, float]


class BindingTime(Enum):
    DESIGN = "design"
    COMPILE = "compile"
    DEPLOY = "deploy"
    RUN = "run"


class Syndrome(Enum):
    """Informational tag naming the failure syndrome an assumption guards against."""

    HORNING = "Horning"
    HIDDEN_INTELLIGENCE = "HiddenIntelligence"
    BOULDING = "Boulding"


class AssumptionError(Exception):
    pass


class DuplicateAssumptionError(AssumptionError):
    def __init__(self, assumption_id: str):
        super().__init__(f"assumption {assumption_id!r} is already registered")
        self.assumption_id = assumption_id


class UnknownAssumptionError(AssumptionError, KeyError):
    def __init__(self, assumption_id: str):
        super().__init__(f"no assumption registered under {assumption_id!r}")
        self.assumption_id = assumption_id

    def __str__(self):
        return self.args[0]


def _same_literal(a: ValueLiteral, b: ValueLiteral) -> bool:
    # tagged comparison: "3", 3 and 3.0 are three different literals
    return type(a) is type(b) and a == b


@dataclass
class Assumption:
    id: str
    description: str
    binding: BindingTime
    assumed: ValueLiteral
    observed: Optional[ValueLiteral] = None
    syndrome_tag: Optional[Syndrome] = None

    @property
    def clashing(self) -> bool:
        return self.observed is not None and not _same_literal(self.observed, self.assumed)


@dataclass(frozen=True)
class ClashRecord:
    assumption_id: str
    assumed: ValueLiteral
    observed: ValueLiteral
    sim_time: int
    handled: bool = False


class AssumptionRegistry:
    """Single-writer store of assumptions and their clash history."""

    def __init__(self):
        self._assumptions: dict[str, Assumption] = {}
        self._log: list[ClashRecord] = []

    def register(self, assumption: Assumption) -> Assumption:
        if assumption.id in self._assumptions:
            raise DuplicateAssumptionError(assumption.id)
        self._assumptions[assumption.id] = assumption
        return assumption

    def lookup(self, assumption_id: str) -> Assumption:
        try:
            return self._assumptions[assumption_id]
        except KeyError:
            raise UnknownAssumptionError(assumption_id) from None

    def __contains__(self, assumption_id: str) -> bool:
        return assumption_id in self._assumptions

    def __iter__(self):
        return iter(self._assumptions.values())

    def __len__(self):
        return len(self._assumptions)

    def observe(
        self, assumption_id: str, value: ValueLiteral, sim_time: int = 0, handled: bool = False
    ) -> Optional[ClashRecord]:
        """Record the true value of an assumption at ``sim_time``.

        Returns the logged :class:`ClashRecord` when ``value`` differs from
        the assumed value, else ``None``. Observing the same clashing value
        twice at the same time step logs it only once.
        """
        assumption = self.lookup(assumption_id)
        if sim_time < 0:
            raise ValueError(f"sim_time must be non-negative, got {sim_time}")
        if self._log and sim_time < self._log[-1].sim_time:
            raise ValueError(
                f"sim_time {sim_time} precedes the last logged clash at {self._log[-1].sim_time}"
            )
        assumption.observed = value
        if _same_literal(value, assumption.assumed):
            return None
        for record in reversed(self._log):
            if record.sim_time != sim_time:
                break
            if record.assumption_id == assumption_id and _same_literal(record.observed, value):
                return record
        record = ClashRecord(assumption_id, assumption.assumed, value, sim_time, handled)
        self._log.append(record)
        return record

    def clash_log(self) -> list[ClashRecord]:
        return list(self._log)

    def clashes_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sim_time", "assumption_id", "assumed", "observed"])
        for rec in self._log:
            writer.writerow([rec.sim_time, rec.assumption_id, rec.assumed, rec.observed])
        return buf.getvalue()
