"""Core trace types: metric schema, ENTRY/EXIT events, runs and frames."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidRun, UnknownMetric


class EventKind(str, enum.Enum):
    ENTRY = "ENTRY"
    EXIT = "EXIT"

    def __str__(self):
        return self.value


_FORBIDDEN = ("\t", "\n", "\r")


@dataclass(frozen=True)
class MetricSchema:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValueError("a metric schema needs at least one metric")
        for name in names:
            if not isinstance(name, str) or not name or any(c in name for c in _FORBIDDEN):
                raise ValueError(f"invalid metric name {name!r}")
        if len(set(names)) != len(names):
            raise ValueError("metric names must be unique")

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownMetric(name) from None


@dataclass(frozen=True, order=True)
class Frame:
    region: str
    method: str

    def __str__(self):
        return f"{self.region}/{self.method}"

    @classmethod
    def parse(cls, text: str) -> "Frame":
        """Split ``region/method`` at the last slash."""
        region, sep, method = text.rpartition("/")
        if not sep:
            raise ValueError(f"frame {text!r} has no region separator")
        return cls(region, method)


@dataclass(frozen=True)
class TraceEvent:
    timestamp: int
    thread_id: int
    kind: EventKind
    region: str
    method: str
    metrics: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(float(v) for v in self.metrics))

    @property
    def frame(self) -> Frame:
        return Frame(self.region, self.method)


@dataclass(frozen=True)
class Violation:
    rule: str
    index: int
    detail: str = field(default="", compare=False)


@dataclass(frozen=True)
class Run:
    schema: MetricSchema
    events: tuple[TraceEvent, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    @classmethod
    def from_events(cls, schema, events: Iterable[TraceEvent], label: str = "") -> "Run":
        """Build a run, ordering events by timestamp (stable for ties)."""
        if not isinstance(schema, MetricSchema):
            schema = MetricSchema(tuple(schema))
        ordered = sorted(events, key=lambda e: e.timestamp)
        return cls(schema, tuple(ordered), label)

    @cached_property
    def values(self) -> np.ndarray:
        """Event-by-metric sample matrix (read-only)."""
        width = len(self.schema)
        if any(len(e.metrics) != width for e in self.events):
            raise InvalidRun(v for v in validate_run(self) if v.rule == "arity")
        arr = np.array([e.metrics for e in self.events], dtype=float).reshape(len(self.events), width)
        arr.setflags(write=False)
        return arr

    @cached_property
    def violations(self) -> tuple:
        """Memoised ``validate_run`` result; runs are immutable."""
        return tuple(validate_run(self))

    def with_label(self, label: str) -> "Run":
        return Run(self.schema, self.events, label)


def _bad_text(s) -> bool:
    return not isinstance(s, str) or not s or any(c in s for c in _FORBIDDEN)


def validate_run(run: Run) -> list[Violation]:
    """Check every run invariant; violations are returned, never raised."""
    out: list[Violation] = []
    width = len(run.schema)
    prev_ts = None
    for i, ev in enumerate(run.events):
        if len(ev.metrics) != width:
            out.append(Violation("arity", i, f"{len(ev.metrics)} values for {width} metrics"))
        if ev.kind not in (EventKind.ENTRY, EventKind.EXIT):
            out.append(Violation("kind", i, repr(ev.kind)))
        if _bad_text(ev.region) or _bad_text(ev.method) or "/" in ev.method:
            out.append(Violation("frame", i, f"{ev.region!r}/{ev.method!r}"))
        # global order implies per-thread order
        if prev_ts is not None and ev.timestamp < prev_ts:
            out.append(Violation("time_order", i, f"{ev.timestamp} < {prev_ts}"))
        prev_ts = ev.timestamp
    return out


def extract_series(run: Run, metric: str) -> list[tuple[int, float]]:
    j = run.schema.index(metric)
    return [(ev.timestamp, ev.metrics[j]) for ev in run.events]


def same_schema(runs: Sequence[Run]) -> bool:
    return len({r.schema for r in runs}) <= 1
