"""Choosing the normal run closest to an abnormal run."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from .correlation import (
    CorrelationVector,
    WindowConfig,
    WindowDistance,
    correlation_vectors,
    nn_distances,
    tie_key,
)
from .errors import EmptyInput
from .model import Run
from .validation import check_choice, check_count, check_run, check_runs

PAIRINGS = ("nearest", "aligned")


@dataclass(frozen=True)
class SelectorConfig:
    top_k: int = 25

    def __post_init__(self):
        check_count(self.top_k, "top_k")


@dataclass(frozen=True)
class SelectionResult:
    chosen: str
    tally: dict = field(default_factory=dict)
    mean_distance: dict = field(default_factory=dict)

    @property
    def farthest(self) -> str:
        """Run with the largest mean window distance (ties: label order)."""
        return max(sorted(self.mean_distance), key=lambda r: tie_key(self.mean_distance[r]))


def sort_distances(dists: Sequence[WindowDistance]) -> list[WindowDistance]:
    return sorted(dists, key=lambda d: (tie_key(d.distance), d.normal_run, d.abnormal_window.start,
                                         d.abnormal_window.size, d.normal_window))


def aligned_distances(abnormal: Sequence[CorrelationVector], normals: Sequence[CorrelationVector]) -> list[WindowDistance]:
    """Index-aligned pairing: abnormal window (s, t) against normal window (s, t) when it exists."""
    lookup = {cv.key: cv for cv in normals}
    out = []
    for cv in abnormal:
        other = lookup.get(cv.key)
        if other is None:
            continue
        d = cv.values - other.values
        out.append(WindowDistance(cv.key, other.run_label, other.key, float(d @ d) ** 0.5))
    return out


def distances_against(abnormal_cvs, normal_cvs_by_run: dict, pairing="nearest") -> list[WindowDistance]:
    out = []
    for label in sorted(normal_cvs_by_run):
        cvs = normal_cvs_by_run[label]
        if pairing == "aligned":
            out.extend(aligned_distances(abnormal_cvs, cvs))
        else:
            out.extend(nn_distances(abnormal_cvs, cvs))
    return sort_distances(out)


def score_runs(normals: Sequence[Run], abnormal: Run, wcfg: WindowConfig = WindowConfig(),
               pairing: str = "nearest") -> list[WindowDistance]:
    """Nearest-window distance of every abnormal window to every normal run, ascending."""
    check_choice(pairing, "pairing", PAIRINGS)
    normals = list(normals)
    if not normals:
        raise EmptyInput("at least one normal run is required")
    check_run(abnormal)
    normals = check_runs(normals, reference=abnormal)
    abnormal_cvs = correlation_vectors(abnormal, wcfg)
    by_run = {r.label: correlation_vectors(r, wcfg) for r in normals}
    return distances_against(abnormal_cvs, by_run, pairing)


def select_closest_run(dists: Sequence[WindowDistance], cfg: SelectorConfig = SelectorConfig()) -> SelectionResult:
    """Pick the run contributing most windows to the ``top_k`` smallest distances.

    Ties go to the lower mean distance over all of a run's windows, then to
    the lexicographically smaller label.
    """
    if not dists:
        raise EmptyInput("no window distances to select from")
    totals: dict[str, list[float]] = defaultdict(list)
    for d in dists:
        totals[d.normal_run].append(d.distance)
    mean = {r: sum(v) / len(v) for r, v in sorted(totals.items())}
    counts = Counter(d.normal_run for d in sort_distances(dists)[:cfg.top_k])
    tally = {r: counts.get(r, 0) for r in sorted(totals)}
    chosen = min(tally, key=lambda r: (-tally[r], tie_key(mean[r]), r))
    return SelectionResult(chosen, tally, mean)
