"""Metric ranking and code-region localization from window distances."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .correlation import (
    CorrelationVector,
    WindowDistance,
    check_compatible,
    group_by_size,
    metric_pairs,
    nn_distances,
    pairs_involving,
    tie_key,
)
from .errors import EmptyInput, UnknownMetric
from .model import Run
from .validation import check_count


@dataclass(frozen=True)
class DiagnosisConfig:
    anomalous_windows: int = 5
    top_regions: int = 3
    top_metrics: int = 3

    def __post_init__(self):
        check_count(self.anomalous_windows, "anomalous_windows")
        check_count(self.top_regions, "top_regions")
        check_count(self.top_metrics, "top_metrics")


@dataclass(frozen=True)
class MetricScore:
    metric: str
    score: float
    rank: int


@dataclass(frozen=True)
class RegionScore:
    region: str
    count: int
    rank: int


def top_anomalous_windows(dists: Sequence[WindowDistance], n_windows: int) -> list[WindowDistance]:
    """The ``n_windows`` farthest abnormal windows of every size class.

    Within a size class the result is ordered by descending distance, with
    earlier windows first on ties; size classes appear in ascending order.
    """
    if not dists:
        raise EmptyInput("no window distances to select from")
    check_count(n_windows, "n_windows")
    by_size: dict[int, list[WindowDistance]] = defaultdict(list)
    for d in dists:
        by_size[d.abnormal_window.size].append(d)
    out = []
    for size in sorted(by_size):
        ranked = sorted(by_size[size], key=lambda d: (-tie_key(d.distance), d.abnormal_window.start))
        out.extend(ranked[:n_windows])
    return out


def _metric_names(cvs: Sequence[CorrelationVector]) -> tuple[str, ...]:
    return cvs[0].window.metrics


def metric_attribution(abnormal_cvs, normal_cvs, cfg: DiagnosisConfig = DiagnosisConfig()):
    """Per-metric anomaly scores plus the anomalous windows they came from.

    For each selected abnormal window the absolute component-wise difference
    to its nearest normal window is charged to both metrics of every pair.
    """
    if not abnormal_cvs or not normal_cvs:
        raise EmptyInput("need at least one abnormal and one normal window")
    check_compatible(abnormal_cvs, normal_cvs)
    names = _metric_names(abnormal_cvs)
    pairs = metric_pairs(len(names))
    dists = nn_distances(abnormal_cvs, normal_cvs)
    chosen = top_anomalous_windows(dists, cfg.anomalous_windows)

    a_lookup = {cv.key: cv for cv in abnormal_cvs}
    n_lookup = {cv.key: cv for cv in normal_cvs}
    scores = np.zeros(len(names))
    for d in chosen:
        diff = np.abs(a_lookup[d.abnormal_window].values - n_lookup[d.normal_window].values)
        for k, (i, j) in enumerate(pairs):
            scores[i] += diff[k]
            scores[j] += diff[k]
    return scores, chosen


def _ranked_metrics(names, scores) -> list[MetricScore]:
    order = sorted(range(len(names)), key=lambda i: (-scores[i], i))
    return [MetricScore(names[i], float(scores[i]), r) for r, i in enumerate(order, start=1)]


def rank_metrics(abnormal_cvs, normal_cvs, cfg: DiagnosisConfig = DiagnosisConfig()) -> list[MetricScore]:
    scores, _ = metric_attribution(abnormal_cvs, normal_cvs, cfg)
    return _ranked_metrics(_metric_names(abnormal_cvs), scores)


def metric_windows(abnormal_cvs, normal_cvs, metric: str, cfg: DiagnosisConfig = DiagnosisConfig()):
    """Top anomalous windows judged only on components involving ``metric``."""
    names = _metric_names(abnormal_cvs)
    if metric not in names:
        raise UnknownMetric(metric)
    cols = pairs_involving(len(names), names.index(metric))
    if cols.size == 0:
        # a single-metric schema has no pairs; every window is equally (un)anomalous
        dists = [WindowDistance(cv.key, "", cv.key, 0.0) for cv in abnormal_cvs]
    else:
        dists = nn_distances(abnormal_cvs, normal_cvs, columns=cols)
    return top_anomalous_windows(dists, cfg.anomalous_windows)


def count_regions(run: Run, windows) -> dict[str, int]:
    """Distinct (window, method) pairs per region over the given abnormal windows."""
    seen: dict[str, set] = defaultdict(set)
    for key in windows:
        for ev in run.events[key.start:key.start + key.size]:
            seen[ev.region].add((key, ev.method))
    return {region: len(pairs) for region, pairs in seen.items()}


def localize_regions(abnormal_run: Run, abnormal_cvs, normal_cvs, metric: str,
                     cfg: DiagnosisConfig = DiagnosisConfig()) -> list[RegionScore]:
    if metric not in abnormal_run.schema.names:
        raise UnknownMetric(metric)
    chosen = metric_windows(abnormal_cvs, normal_cvs, metric, cfg)
    counts = count_regions(abnormal_run, [d.abnormal_window for d in chosen])
    order = sorted(counts, key=lambda r: (-counts[r], r))
    return [RegionScore(r, counts[r], k) for k, r in enumerate(order, start=1)]
