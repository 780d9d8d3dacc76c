"""Windowing, pairwise Pearson correlation vectors and window distances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import LengthMismatch, NoComparableWindows, SchemaMismatch, WindowTooSmall
from .model import Run
from .validation import check_fraction, check_window_sizes

DEFAULT_SIZES = (32, 64, 128)
DEFAULT_STRIDE = 0.5

# rows per block when materialising abnormal x normal difference tensors
_CHUNK = 64

# distances equal to this many decimals count as tied, so tie rules are not
# decided by summation-order rounding noise
TIE_DECIMALS = 12


def tie_key(distance: float) -> float:
    return round(distance, TIE_DECIMALS)


@dataclass(frozen=True)
class WindowConfig:
    sizes: tuple[int, ...] = DEFAULT_SIZES
    stride_fraction: float = DEFAULT_STRIDE

    def __post_init__(self):
        object.__setattr__(self, "sizes", check_window_sizes(self.sizes))
        object.__setattr__(self, "stride_fraction", check_fraction(self.stride_fraction, "stride_fraction"))

    def step(self, size: int) -> int:
        return max(1, math.floor(size * self.stride_fraction))


class WindowKey(NamedTuple):
    size: int
    start: int

    def __str__(self):
        return f"{self.size}:{self.start}"


@dataclass(frozen=True, eq=False)
class Window:
    run_label: str
    size_class: int
    start: int
    samples: np.ndarray
    metrics: tuple[str, ...] = ()

    @property
    def key(self) -> WindowKey:
        return WindowKey(self.size_class, self.start)

    def __len__(self):
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class CorrelationVector:
    values: np.ndarray
    window: Window

    @property
    def key(self) -> WindowKey:
        return self.window.key

    @property
    def size_class(self) -> int:
        return self.window.size_class

    @property
    def run_label(self) -> str:
        return self.window.run_label

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, order=True)
class WindowDistance:
    abnormal_window: WindowKey
    normal_run: str
    normal_window: WindowKey
    distance: float = field(compare=False)


def metric_pairs(n_metrics: int) -> list[tuple[int, int]]:
    """Lexicographic (i, j), i < j, pair order used by every correlation vector."""
    return list(combinations(range(n_metrics), 2))


def pairs_involving(n_metrics: int, metric: int) -> np.ndarray:
    return np.array([k for k, (i, j) in enumerate(metric_pairs(n_metrics)) if metric in (i, j)], dtype=int)


def pearson(x, y) -> float:
    """Pearson coefficient; 0.0 when either series is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"series lengths differ: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise LengthMismatch("pearson needs at least two samples")
    if x.max() == x.min() or y.max() == y.min():
        return 0.0
    dx = _unit_scale(x - x.mean())
    dy = _unit_scale(y - y.mean())
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if denom == 0.0:
        return 0.0
    return min(1.0, max(-1.0, float(np.dot(dx, dy)) / denom))


def _unit_scale(centered: np.ndarray, axis=None) -> np.ndarray:
    """Divide by the largest magnitude so squares neither underflow nor overflow."""
    peak = np.max(np.abs(centered), axis=axis, keepdims=axis is not None)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(peak > 0, centered / np.where(peak > 0, peak, 1.0), 0.0)


def _corr_block(samples: np.ndarray) -> np.ndarray:
    """(k, s, M) stacked windows -> (k, M(M-1)/2) correlation vectors."""
    k, _, m = samples.shape
    iu, ju = np.triu_indices(m, 1)
    constant = samples.max(axis=1) == samples.min(axis=1)
    centered = _unit_scale(samples - samples.mean(axis=1, keepdims=True), axis=1)
    ss = np.einsum("ksm,ksm->km", centered, centered)
    cov = np.einsum("ksi,ksj->kij", centered, centered)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cov[:, iu, ju] / np.sqrt(ss[:, iu] * ss[:, ju])
    r[constant[:, iu] | constant[:, ju] | ~np.isfinite(r)] = 0.0
    return np.clip(r, -1.0, 1.0)


def _starts(n: int, size: int, step: int) -> list[int]:
    if n < size:
        return [0]
    return [s for s in range(0, n, step) if n - s >= 2]


def make_windows(run: Run, cfg: WindowConfig = WindowConfig()) -> list[Window]:
    values = run.values
    n = values.shape[0]
    if n == 0:
        raise ValueError("cannot window an empty run")
    out = []
    names = run.schema.names
    for size in cfg.sizes:
        for s in _starts(n, size, cfg.step(size)):
            out.append(Window(run.label, size, s, values[s:s + size], names))
    return out


def correlation_vector(w: Window) -> CorrelationVector:
    if len(w) < 2:
        raise WindowTooSmall(f"window {w.key} has {len(w)} sample(s)")
    vals = _corr_block(w.samples[None, :, :])[0]
    vals.setflags(write=False)
    return CorrelationVector(vals, w)


def correlation_vectors(run: Run, cfg: WindowConfig = WindowConfig()) -> list[CorrelationVector]:
    """All correlation vectors of a run, ordered by (size class, start).

    Full-length windows of one size class are evaluated in a single batch.
    """
    windows = make_windows(run, cfg)
    out: list[CorrelationVector] = []
    by_size: dict[int, list[Window]] = {}
    for w in windows:
        by_size.setdefault(w.size_class, []).append(w)
    for size in sorted(by_size):
        ws = by_size[size]
        full = [w for w in ws if len(w) == size]
        if full:
            block = _corr_block(np.stack([w.samples for w in full]))
            block.setflags(write=False)
            for w, row in zip(full, block):
                out.append(CorrelationVector(row, w))
        for w in ws:
            if len(w) != size:
                out.append(correlation_vector(w))
    out.sort(key=lambda cv: cv.key)
    return out


def window_distance(a, b) -> float:
    va = a.values if isinstance(a, CorrelationVector) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, CorrelationVector) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise LengthMismatch(f"vector lengths differ: {va.shape} vs {vb.shape}")
    d = va - vb
    return float(math.sqrt(float(np.dot(d, d))))


def group_by_size(cvs: Sequence[CorrelationVector], columns=None):
    """Map size class -> (window keys, stacked value matrix) in start order."""
    groups: dict[int, list[CorrelationVector]] = {}
    for cv in cvs:
        groups.setdefault(cv.size_class, []).append(cv)
    out = {}
    for size, items in groups.items():
        items.sort(key=lambda cv: cv.window.start)
        mat = np.stack([cv.values for cv in items])
        if columns is not None:
            mat = mat[:, columns]
        out[size] = (items, mat)
    return out


def nearest(a_mat: np.ndarray, n_mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each row of ``a_mat`` the index of and distance to its nearest ``n_mat`` row.

    Ties (equal to ``TIE_DECIMALS`` places) resolve to the lowest normal index.
    """
    idx = np.empty(a_mat.shape[0], dtype=int)
    dist = np.empty(a_mat.shape[0], dtype=float)
    for lo in range(0, a_mat.shape[0], _CHUNK):
        diff = a_mat[lo:lo + _CHUNK, None, :] - n_mat[None, :, :]
        d = np.sqrt(np.einsum("abp,abp->ab", diff, diff))
        j = np.argmin(np.round(d, TIE_DECIMALS), axis=1)
        idx[lo:lo + _CHUNK] = j
        dist[lo:lo + _CHUNK] = d[np.arange(d.shape[0]), j]
    return idx, dist


def check_compatible(abnormal: Sequence[CorrelationVector], normals: Sequence[CorrelationVector]):
    metrics = {cv.window.metrics for cv in abnormal} | {cv.window.metrics for cv in normals}
    if len(metrics) > 1:
        raise SchemaMismatch("correlation vectors come from different metric schemas")
    lengths = {len(cv) for cv in abnormal} | {len(cv) for cv in normals}
    if len(lengths) > 1:
        raise LengthMismatch(f"correlation vectors have different lengths {sorted(lengths)}")


def nn_distances(abnormal: Sequence[CorrelationVector], normals: Sequence[CorrelationVector],
                 columns=None) -> list[WindowDistance]:
    """Pair every abnormal window with its nearest same-size normal window.

    ``columns`` restricts the comparison to a subset of correlation components.
    All normal vectors must come from a single run.
    """
    check_compatible(abnormal, normals)
    labels = {cv.run_label for cv in normals}
    if len(labels) > 1:
        raise ValueError(f"nn_distances compares against one normal run, got {sorted(labels)}")
    a_groups = group_by_size(abnormal, columns)
    n_groups = group_by_size(normals, columns)
    out = []
    for size in sorted(a_groups):
        if size not in n_groups:
            raise NoComparableWindows(f"no normal windows of size {size}")
        a_items, a_mat = a_groups[size]
        n_items, n_mat = n_groups[size]
        idx, dist = nearest(a_mat, n_mat)
        for cv, j, d in zip(a_items, idx, dist):
            nw = n_items[j]
            out.append(WindowDistance(cv.key, nw.run_label, nw.key, float(d)))
    return out
