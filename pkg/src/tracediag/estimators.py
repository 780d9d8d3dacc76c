"""scikit-learn style estimators wrapping the diagnosis stages.

Each estimator is fitted on normal run(s) and then applied to an abnormal
run, so parameters can be inspected and tuned with ``get_params`` /
``set_params`` and the objects cloned like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .correlation import DEFAULT_SIZES, DEFAULT_STRIDE, WindowConfig, correlation_vectors
from .diagnosis import (
    DiagnosisConfig,
    _ranked_metrics,
    localize_regions,
    metric_attribution,
)
from .errors import SchemaMismatch
from .selection import PAIRINGS, SelectorConfig, distances_against, select_closest_run
from .stacks import KINDS, StackConfig, collect_region_stacks, compare_stacks, reconstruct_stacks
from .validation import check_choice, check_run, check_runs


class CorrelationProfiler(TransformerMixin, BaseEstimator):
    """Turn a run into its per-window pairwise correlation vectors.

    Parameters
    ----------
    window_sizes : tuple of int, default=(32, 64, 128)
        Window lengths in events; every size is an independent split.
    stride : float, default=0.5
        Window step as a fraction of the window length.
    """

    def __init__(self, window_sizes=DEFAULT_SIZES, stride=DEFAULT_STRIDE):
        self.window_sizes = window_sizes
        self.stride = stride

    def _window_config(self) -> WindowConfig:
        return WindowConfig(tuple(self.window_sizes), self.stride)

    def fit(self, run=None, y=None):
        self.window_config_ = self._window_config()
        if run is not None:
            self.metrics_ = check_run(run).schema.names
        return self

    def transform(self, run):
        """List of CorrelationVector ordered by (size class, start)."""
        cfg = self.window_config_ if hasattr(self, "window_config_") else self._window_config()
        return correlation_vectors(check_run(run), cfg)

    def transform_matrix(self, run) -> np.ndarray:
        cvs = self.transform(run)
        return np.stack([cv.values for cv in cvs])


class MetricRanker(BaseEstimator):
    """Rank metrics by how far an abnormal run's correlations drift from a normal run.

    Parameters
    ----------
    window_sizes : tuple of int, default=(32, 64, 128)
    stride : float, default=0.5
    n_windows : int, default=5
        Anomalous windows kept per size class (largest nearest-neighbour distance).
    top_regions : int, default=3
        Regions reported by :meth:`localize`.

    Attributes
    ----------
    normal_cvs_ : list of CorrelationVector
    scores_ : ndarray of shape (n_metrics,)
        Set by :meth:`rank`; schema-ordered anomaly scores.
    anomalous_windows_ : list of WindowDistance
    """

    def __init__(self, window_sizes=DEFAULT_SIZES, stride=DEFAULT_STRIDE, n_windows=5, top_regions=3):
        self.window_sizes = window_sizes
        self.stride = stride
        self.n_windows = n_windows
        self.top_regions = top_regions

    def _configs(self):
        return (WindowConfig(tuple(self.window_sizes), self.stride),
                DiagnosisConfig(anomalous_windows=self.n_windows, top_regions=self.top_regions))

    def fit(self, normal, y=None):
        wcfg, _ = self._configs()
        normal = check_run(normal)
        self.normal_label_ = normal.label
        self.metrics_ = normal.schema.names
        self.normal_cvs_ = correlation_vectors(normal, wcfg)
        return self

    def _abnormal_cvs(self, abnormal):
        check_is_fitted(self, "normal_cvs_")
        wcfg, _ = self._configs()
        check_run(abnormal)
        if abnormal.schema.names != self.metrics_:
            raise SchemaMismatch("abnormal run metrics differ from the fitted normal run")
        return correlation_vectors(abnormal, wcfg)

    def transform(self, abnormal) -> np.ndarray:
        """Schema-ordered metric anomaly scores."""
        _, dcfg = self._configs()
        scores, chosen = metric_attribution(self._abnormal_cvs(abnormal), self.normal_cvs_, dcfg)
        self.scores_ = scores
        self.anomalous_windows_ = chosen
        return scores

    def rank(self, abnormal):
        """MetricScore list, most anomalous first."""
        scores = self.transform(abnormal)
        return _ranked_metrics(self.metrics_, scores)

    def localize(self, abnormal, metric):
        """RegionScore list for ``metric``, truncated to ``top_regions``."""
        _, dcfg = self._configs()
        regions = localize_regions(abnormal, self._abnormal_cvs(abnormal), self.normal_cvs_, metric, dcfg)
        return regions[: self.top_regions]


class ClosestRunSelector(BaseEstimator):
    """Pick the normal run whose windows dominate the ``top_k`` closest matches.

    Parameters
    ----------
    window_sizes : tuple of int, default=(32, 64, 128)
    stride : float, default=0.5
    top_k : int, default=25
    pairing : {"nearest", "aligned"}, default="nearest"
        ``nearest`` pairs each abnormal window with the closest window of a
        normal run; ``aligned`` compares windows at the same position.
    """

    def __init__(self, window_sizes=DEFAULT_SIZES, stride=DEFAULT_STRIDE, top_k=25, pairing="nearest"):
        self.window_sizes = window_sizes
        self.stride = stride
        self.top_k = top_k
        self.pairing = pairing

    def fit(self, normals, y=None):
        check_choice(self.pairing, "pairing", PAIRINGS)
        SelectorConfig(self.top_k)
        wcfg = WindowConfig(tuple(self.window_sizes), self.stride)
        normals = check_runs(normals)
        self.metrics_ = normals[0].schema.names
        self.labels_ = tuple(r.label for r in normals)
        self.runs_ = {r.label: r for r in normals}
        self.normal_cvs_ = {r.label: correlation_vectors(r, wcfg) for r in normals}
        return self

    def score(self, abnormal):
        """Sorted WindowDistance list of the abnormal run against every fitted run."""
        check_is_fitted(self, "normal_cvs_")
        wcfg = WindowConfig(tuple(self.window_sizes), self.stride)
        check_runs([abnormal], reference=self.runs_[self.labels_[0]])
        self.distances_ = distances_against(correlation_vectors(abnormal, wcfg), self.normal_cvs_, self.pairing)
        return self.distances_

    def select(self, abnormal):
        self.selection_ = select_closest_run(self.score(abnormal), SelectorConfig(self.top_k))
        return self.selection_

    def predict(self, abnormal) -> str:
        return self.select(abnormal).chosen


class StackComparator(BaseEstimator):
    """Compare call stacks of a suspicious region between normal and abnormal runs.

    Parameters
    ----------
    region_filter : str
        Region prefix; only stacks whose innermost frame lies in it are kept.
    len_threshold : int, default=3
        Length gate ``N`` separating repetitive from recursive pairs.
    rho : int, default=2
        Overlap below which an abnormal stack counts as disjoint.
    mode : {"repetitive", "recursive", "disjoint", "all"}, default="all"
    """

    def __init__(self, region_filter="", len_threshold=3, rho=2, mode="all"):
        self.region_filter = region_filter
        self.len_threshold = len_threshold
        self.rho = rho
        self.mode = mode

    def _config(self) -> StackConfig:
        if not self.region_filter:
            raise ValueError("region_filter must be non-empty")
        return StackConfig(self.region_filter, self.len_threshold, self.rho)

    def _kinds(self):
        check_choice(self.mode, "mode", KINDS + ("all",))
        return KINDS if self.mode == "all" else (self.mode,)

    def fit(self, normal, y=None):
        cfg = self._config()
        self._kinds()
        normal = check_run(normal, allow_empty=True)
        trace = reconstruct_stacks(normal)
        self.normal_warnings_ = list(trace.warnings)
        self.normal_stacks_ = collect_region_stacks(normal, cfg, trace)
        return self

    def compare(self, abnormal):
        """Mapping kind -> ranked StackPair list."""
        check_is_fitted(self, "normal_stacks_")
        cfg = self._config()
        abnormal = check_run(abnormal, allow_empty=True)
        trace = reconstruct_stacks(abnormal)
        self.abnormal_warnings_ = list(trace.warnings)
        self.abnormal_stacks_ = collect_region_stacks(abnormal, cfg, trace)
        self.pairs_ = compare_stacks(self.abnormal_stacks_, self.normal_stacks_, cfg, self._kinds())
        return self.pairs_
