"""Seeded synthetic traces with injectable faults.

A run is produced in two layers.  The *skeleton* replays a fixed call graph
on several threads: every top-level call expands its callees depth-first and
threads are interleaved by a scheduler RNG.  The *metrics* are a latent AR(1)
load signal mixed into each metric, per-metric noise, and an activity term
that rises with ENTRY events in the region tied to the metric.

Faults only act on events at or after the onset index, so a faulted run and
its unfaulted twin (same config, same seed) share an identical prefix.
"""

from __future__ import annotations

import math
import zlib
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import InvalidFault
from .model import EventKind, Frame, MetricSchema, Run, TraceEvent
from .trace_io import FAULT_KINDS, FaultManifest
from .validation import check_count

DEFAULT_REGIONS = (
    ("org/example/app/Main", ("main", "serve", "shutdown")),
    ("org/example/io/Client", ("f", "g", "h")),
    ("org/example/io/BlockMap", ("lookup", "update")),
    ("org/example/net/Channel", ("send", "recv", "ack")),
)

HANDLER_SUFFIX = "$ExceptionHandler"

AR_COEF = 0.9
ACTIVITY_DECAY = 0.8
ACTIVITY_GAIN = 1.0
LOCAL_CALL_P = 0.8
EXTRA_CALL_P = 0.15
BASE_TIME_NS = 1_000_000_000


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    n_metrics: int = 8
    n_events: int = 2000
    n_threads: int = 2
    regions: tuple = DEFAULT_REGIONS
    base_correlation: float = 0.8
    # optional explicit call graph as (("region/method", ("region/callee", ...)), ...)
    calls: Optional[tuple] = None
    metric_names: Optional[tuple] = None

    def __post_init__(self):
        check_count(self.n_metrics, "n_metrics", minimum=2)
        check_count(self.n_events, "n_events")
        check_count(self.n_threads, "n_threads")
        if not 0.0 <= self.base_correlation <= 1.0:
            raise ValueError(f"base_correlation must lie in [0, 1], got {self.base_correlation}")
        regions = tuple((str(r), tuple(str(m) for m in ms)) for r, ms in self.regions)
        if not regions or any(not ms for _, ms in regions):
            raise ValueError("every region needs at least one method")
        object.__setattr__(self, "regions", regions)
        frames = [Frame(r, m) for r, ms in regions for m in ms]
        if len(set(frames)) != len(frames):
            raise ValueError("duplicate region/method in regions")
        if self.calls is not None:
            calls = self.calls.items() if isinstance(self.calls, dict) else self.calls
            object.__setattr__(self, "calls", tuple((k, tuple(v)) for k, v in calls))
        if self.metric_names is not None:
            names = tuple(self.metric_names)
            if len(names) != self.n_metrics:
                raise ValueError("metric_names must have n_metrics entries")
            object.__setattr__(self, "metric_names", names)
        call_graph(self.regions, self.calls)  # validates explicit graphs early

    @property
    def schema(self) -> MetricSchema:
        names = self.metric_names or tuple(f"m{j}" for j in range(self.n_metrics))
        return MetricSchema(names)

    @property
    def frames(self) -> list[Frame]:
        return [Frame(r, m) for r, ms in self.regions for m in ms]


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    metric: Optional[str] = None
    method: Optional[str] = None
    magnitude: float = 10.0
    onset_fraction: float = 0.5

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise InvalidFault(f"unknown fault kind {self.kind!r}; expected one of {list(FAULT_KINDS)}")
        if self.kind == "leak" and not self.metric:
            raise InvalidFault("a leak fault needs a target metric")
        if self.kind != "leak" and not self.method:
            raise InvalidFault(f"a {self.kind} fault needs a target method")
        if not 0.0 <= self.onset_fraction < 1.0:
            raise InvalidFault(f"onset_fraction must lie in [0, 1), got {self.onset_fraction}")
        if not self.magnitude > 0 or not math.isfinite(self.magnitude):
            raise InvalidFault(f"magnitude must be positive, got {self.magnitude}")


@dataclass(frozen=True, eq=False)
class CallGraph:
    callees: dict
    roots: tuple
    _sizes: dict = field(default_factory=dict, repr=False)

    def tree_events(self, frame: Frame) -> int:
        """ENTRY plus EXIT events produced by one unfaulted call of ``frame``."""
        if frame not in self._sizes:
            self._sizes[frame] = 2 + sum(self.tree_events(c) for c in self.callees[frame])
        return self._sizes[frame]


@lru_cache(maxsize=64)
def call_graph(regions: tuple, calls: Optional[tuple] = None) -> CallGraph:
    """The program's call graph: explicit when given, otherwise derived from the regions alone."""
    frames = [Frame(r, m) for r, ms in regions for m in ms]
    if calls is not None:
        known = set(frames)
        callees = {f: () for f in frames}
        for caller, targets in calls:
            cf = Frame.parse(caller)
            tfs = tuple(Frame.parse(t) for t in targets)
            for x in (cf,) + tfs:
                if x not in known:
                    raise ValueError(f"call graph names unknown method {x}")
            callees[cf] = tfs
        _check_acyclic(callees)
        called = {c for cs in callees.values() for c in cs}
        roots = tuple(f for f in frames if f not in called)
        return CallGraph(callees, roots)

    rng = np.random.default_rng(zlib.crc32(repr(regions).encode()))
    n_roots = len(regions[0][1])
    region_of = [k for k, (_, ms) in enumerate(regions) for _ in ms]
    edges: dict[int, set] = {i: set() for i in range(len(frames))}
    for j in range(n_roots, len(frames)):
        # methods mostly call into their own region; the first method of a region is its entry point
        local = [i for i in range(j) if region_of[i] == region_of[j]]
        if local and rng.random() < LOCAL_CALL_P:
            edges[int(rng.choice(local))].add(j)
        else:
            edges[int(rng.integers(0, j))].add(j)
    for i in range(len(frames)):
        for j in range(max(i + 1, n_roots), len(frames)):
            p = EXTRA_CALL_P if region_of[i] == region_of[j] else EXTRA_CALL_P / 3
            if rng.random() < p:
                edges[i].add(j)
    callees = {frames[i]: tuple(frames[j] for j in sorted(edges[i])) for i in range(len(frames))}
    return CallGraph(callees, tuple(frames[:n_roots]))


def _check_acyclic(callees):
    state: dict = {}

    def visit(f):
        if state.get(f) == 1:
            raise ValueError(f"call graph has a cycle through {f}")
        if state.get(f) == 2:
            return
        state[f] = 1
        for c in callees[f]:
            visit(c)
        state[f] = 2

    for f in callees:
        visit(f)


def resolve_method(cfg: GenConfig, method: str) -> Frame:
    """Accept ``region/method`` or a bare method name that is unique across regions."""
    frames = cfg.frames
    if "/" in method:
        f = Frame.parse(method)
        if f in frames:
            return f
        raise InvalidFault(f"method {method!r} is not part of the generated program")
    hits = [f for f in frames if f.method == method]
    if len(hits) != 1:
        what = "ambiguous" if hits else "unknown"
        raise InvalidFault(f"{what} method {method!r}")
    return hits[0]


def _plan(cfg: GenConfig, graph: CallGraph) -> list[list[Frame]]:
    rng = np.random.default_rng([cfg.seed, 1])
    plan: list[list[Frame]] = [[] for _ in range(cfg.n_threads)]
    total, k = 0, 0
    while total < cfg.n_events or k < cfg.n_threads:
        root = graph.roots[int(rng.integers(len(graph.roots)))]
        plan[k % cfg.n_threads].append(root)
        total += graph.tree_events(root)
        k += 1
    return plan


@dataclass
class _Slot:
    frame: Frame
    pending: deque = field(default_factory=deque)


@dataclass
class _Thread:
    roots: deque
    stack: list = field(default_factory=list)


def _skeleton(cfg: GenConfig, fault: Optional[FaultSpec], target: Optional[Frame], onset: int):
    """Emit (timestamp, thread_id, kind, frame) tuples."""
    graph = call_graph(cfg.regions, cfg.calls)
    plan = _plan(cfg, graph)
    rng = np.random.default_rng([cfg.seed, 2])
    threads = {t + 1: _Thread(deque((f, None) for f in plan[t])) for t in range(cfg.n_threads)}
    depth = max(1, math.ceil(fault.magnitude)) if fault is not None else 1
    events: list[tuple] = []
    now = BASE_TIME_NS

    def children(frame, tag):
        if tag is not None and tag[0] == "handler":
            i = tag[1]
            return deque([(Frame(frame.region, f"recover_{target.method}_{i}"), ("handler", i + 1))]) if i < depth else deque()
        if tag is not None and tag[0] == "nest" and tag[1] < depth:
            return deque([(frame, ("nest", tag[1] + 1))])
        return deque((c, None) for c in graph.callees[frame])

    def enter(tid: int, frame: Frame, tag):
        th = threads[tid]
        idx = len(events)
        faulty = fault is not None and fault.kind != "leak" and frame == target and idx >= onset
        if faulty and fault.kind == "repetitive" and tag is None:
            container = th.stack[-1].pending if th.stack else th.roots
            for _ in range(depth - 1):
                container.appendleft((frame, ("retry",)))
        if faulty and fault.kind == "recursive" and tag is None:
            tag = ("nest", 1)
        pending = children(frame, tag)
        events.append((now, tid, EventKind.ENTRY, frame))
        th.stack.append(_Slot(frame, pending))
        if faulty and fault.kind == "disjoint":
            # the call fails: unwind the whole tree, then run the handler at thread level
            for slot in th.stack:
                slot.pending.clear()
            handler = Frame(frame.region + HANDLER_SUFFIX, f"handle_{frame.method}")
            th.roots.appendleft((handler, ("handler", 1)))

    active = sorted(threads)
    while active:
        tid = active[int(rng.integers(len(active)))]
        th = threads[tid]
        if th.stack and th.stack[-1].pending:
            enter(tid, *th.stack[-1].pending.popleft())
        elif th.stack:
            slot = th.stack.pop()
            events.append((now, tid, EventKind.EXIT, slot.frame))
        else:
            enter(tid, *th.roots.popleft())
        now += int(rng.integers(1, 1000))
        if not th.stack and not th.roots:
            active.remove(tid)
    return events


def _ar1(innov: np.ndarray, coef: float) -> np.ndarray:
    out = np.empty_like(innov)
    acc = np.zeros(innov.shape[1:])
    for t in range(innov.shape[0]):
        acc = coef * acc + innov[t]
        out[t] = acc
    return out


def _metrics(cfg: GenConfig, skeleton, fault: Optional[FaultSpec], onset: int) -> np.ndarray:
    n, m = len(skeleton), cfg.n_metrics
    rng = np.random.default_rng([cfg.seed, 3])
    draws = rng.standard_normal((n, m + 1))
    signs = np.random.default_rng([cfg.seed, 4]).choice([-1.0, 1.0], size=m)
    load = cfg.base_correlation * signs

    z = _ar1(draws[:, :1] * math.sqrt(1 - AR_COEF ** 2), AR_COEF)[:, 0]
    region_index = {r: k for k, (r, _) in enumerate(cfg.regions)}
    hits = np.zeros((n, m))
    for t, (_, _, kind, frame) in enumerate(skeleton):
        if kind == EventKind.ENTRY:
            base = frame.region.split("$", 1)[0]
            hits[t, region_index.get(base, 0) % m] = 1.0
    activity = _ar1(hits, ACTIVITY_DECAY)

    offset = 100.0 * np.arange(1, m + 1)
    scale = np.arange(1, m + 1, dtype=float)
    unit = load * z[:, None] + np.sqrt(1 - load ** 2) * draws[:, 1:] + ACTIVITY_GAIN * activity
    if fault is not None and fault.kind == "leak":
        j = cfg.schema.index(fault.metric)
        t = np.arange(n)
        ramp = np.where(t >= onset, (t - onset + 1) / max(1, n - onset), 0.0)
        unit[:, j] += fault.magnitude * ramp
    return np.round(offset + scale * unit, 4)


def _build(cfg: GenConfig, fault, target, onset, label) -> Run:
    skel = _skeleton(cfg, fault, target, onset)
    values = _metrics(cfg, skel, fault, onset)
    events = tuple(TraceEvent(ts, tid, kind, fr.region, fr.method, tuple(row))
                   for (ts, tid, kind, fr), row in zip(skel, values.tolist()))
    return Run(cfg.schema, events, label)


def generate_normal(cfg: GenConfig, label: Optional[str] = None) -> Run:
    return _build(cfg, None, None, 0, label if label is not None else f"normal-{cfg.seed}")


def inject_fault(cfg: GenConfig, fault: FaultSpec, label: Optional[str] = None,
                 source_label: Optional[str] = None) -> tuple[Run, FaultManifest]:
    """Generate the faulted twin of ``generate_normal(cfg)`` and its ground truth."""
    target = None
    if fault.kind == "leak":
        if fault.metric not in cfg.schema.names:
            raise InvalidFault(f"unknown metric {fault.metric!r}")
    else:
        target = resolve_method(cfg, fault.method)
    twin_len = len(_skeleton(cfg, None, None, 0))
    onset = math.floor(fault.onset_fraction * twin_len)
    run = _build(cfg, fault, target, onset, label if label is not None else f"abnormal-{cfg.seed}")
    manifest = FaultManifest(
        kind=fault.kind,
        metric=fault.metric or "",
        region=target.region if target else "",
        method=target.method if target else "",
        onset_index=onset,
        source_run=source_label if source_label is not None else f"normal-{cfg.seed}",
        seed=cfg.seed,
        magnitude=float(fault.magnitude),
    )
    return run, manifest


def make_fixture(cfg: GenConfig, fault: FaultSpec, n_normals: int = 1, source: int = 0,
                 normal_configs=None):
    """Normal runs, one abnormal run derived from ``normals[source]``, and its manifest.

    Normal ``i`` uses ``cfg`` with seed ``cfg.seed + i`` unless explicit
    ``normal_configs`` are supplied.
    """
    if normal_configs is None:
        normal_configs = [replace(cfg, seed=cfg.seed + i) for i in range(n_normals)]
    normal_configs = list(normal_configs)
    if not 0 <= source < len(normal_configs):
        raise ValueError(f"source index {source} out of range")
    normals = [generate_normal(c, label=f"normal-{i}") for i, c in enumerate(normal_configs)]
    abnormal, manifest = inject_fault(normal_configs[source], fault, label="abnormal",
                                      source_label=normals[source].label)
    return normals, abnormal, manifest
