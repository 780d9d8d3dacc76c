"""Input validation helpers used by the estimators and pipeline entry points."""

from __future__ import annotations

import numbers
from typing import Sequence

from .errors import EmptyInput, InvalidRun, SchemaMismatch
from .model import Run


def check_run(run, allow_empty=False) -> Run:
    if not isinstance(run, Run):
        raise TypeError(f"expected a Run, got {type(run).__name__}")
    violations = run.violations
    if violations:
        raise InvalidRun(violations)
    if not allow_empty and not run.events:
        raise EmptyInput(f"run {run.label!r} has no events")
    return run


def check_runs(runs, reference: Run | None = None) -> list[Run]:
    """Validate a non-empty collection of runs sharing one schema."""
    if isinstance(runs, Run):
        runs = [runs]
    runs = list(runs)
    if not runs:
        raise EmptyInput("at least one run is required")
    for r in runs:
        check_run(r)
    schema = reference.schema if reference is not None else runs[0].schema
    for r in runs:
        if r.schema != schema:
            raise SchemaMismatch(f"run {r.label!r} has metrics {list(r.schema.names)}, expected {list(schema.names)}")
    labels = [r.label for r in runs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"run labels must be unique, got {labels}")
    return runs


def check_count(value, name, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_window_sizes(sizes) -> tuple[int, ...]:
    if isinstance(sizes, numbers.Integral):
        sizes = (sizes,)
    sizes = tuple(sizes)
    if not sizes:
        raise ValueError("at least one window size is required")
    out = tuple(check_count(s, "window size", minimum=2) for s in sizes)
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate window sizes in {list(out)}")
    return out


def check_fraction(value, name, low=0.0, high=1.0, low_open=True) -> float:
    value = float(value)
    ok = (value > low if low_open else value >= low) and value <= high
    if not ok:
        raise ValueError(f"{name} must lie in {'(' if low_open else '['}{low}, {high}], got {value}")
    return value


def check_choice(value, name, choices: Sequence[str]) -> str:
    if value not in choices:
        raise ValueError(f"{name} must be one of {list(choices)}, got {value!r}")
    return value
