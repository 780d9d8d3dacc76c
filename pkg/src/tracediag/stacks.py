"""Per-thread call-stack reconstruction and abnormal/normal stack comparison."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .model import EventKind, Frame, Run
from .validation import check_count

KINDS = ("repetitive", "recursive", "disjoint")


@dataclass(frozen=True)
class CallStack:
    frames: tuple[Frame, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError("a call stack has at least one frame")

    @property
    def key(self) -> str:
        return "\t".join(str(f) for f in self.frames)

    @property
    def unique(self) -> frozenset:
        return frozenset(self.frames)

    def __len__(self):
        return len(self.frames)

    @classmethod
    def of(cls, *frames: str) -> "CallStack":
        """Build from ``"region/method"`` strings."""
        return cls(tuple(Frame.parse(f) for f in frames))


@dataclass(frozen=True)
class StackRecord:
    stack: CallStack
    freq: int

    def __post_init__(self):
        check_count(self.freq, "freq")

    @property
    def key(self) -> str:
        return self.stack.key


@dataclass(frozen=True)
class StackConfig:
    region_filter: str = ""
    len_threshold: int = 3
    rho: int = 2

    def __post_init__(self):
        check_count(self.len_threshold, "len_threshold")
        check_count(self.rho, "rho")


@dataclass(frozen=True)
class StackPair:
    kind: str
    abnormal: StackRecord
    normal: Optional[StackRecord]
    score: float


@dataclass(frozen=True)
class UnbalancedWarning:
    thread_id: int
    index: int
    message: str

    def __str__(self):
        return f"thread {self.thread_id}, event {self.index}: {self.message}"


@dataclass
class StackTrace:
    snapshots: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    open_frames: dict = field(default_factory=dict)


def reconstruct_stacks(run: Run) -> StackTrace:
    """Replay ENTRY/EXIT events into per-thread stacks, snapshotting at each ENTRY.

    An EXIT that does not match the top frame unwinds to the nearest matching
    frame (one warning per skipped frame); with no match anywhere it is
    dropped with a warning.
    """
    stacks: dict[int, list[Frame]] = {}
    result = StackTrace()
    for i, ev in enumerate(run.events):
        tid = ev.thread_id
        stack = stacks.setdefault(tid, [])
        result.snapshots.setdefault(tid, [])
        frame = Frame(ev.region, ev.method)
        if ev.kind == EventKind.ENTRY:
            stack.append(frame)
            result.snapshots[tid].append((i, CallStack(tuple(stack))))
            continue
        if stack and stack[-1] == frame:
            stack.pop()
            continue
        depth = next((d for d in range(len(stack) - 1, -1, -1) if stack[d] == frame), None)
        if depth is None:
            result.warnings.append(UnbalancedWarning(tid, i, f"EXIT {frame} has no open ENTRY; dropped"))
            continue
        while len(stack) > depth + 1:
            skipped = stack.pop()
            result.warnings.append(UnbalancedWarning(tid, i, f"EXIT {frame} closes unexited {skipped}"))
        stack.pop()
    result.open_frames = {tid: len(s) for tid, s in stacks.items()}
    return result


def collect_region_stacks(run: Run, cfg: StackConfig, trace: StackTrace | None = None) -> list[StackRecord]:
    """Aggregate ENTRY snapshots of methods whose region starts with the filter."""
    if not cfg.region_filter:
        raise ValueError("region_filter must be non-empty")
    trace = trace if trace is not None else reconstruct_stacks(run)
    counts: Counter = Counter()
    stacks: dict[str, CallStack] = {}
    for snaps in trace.snapshots.values():
        for _, cs in snaps:
            if cs.frames[-1].region.startswith(cfg.region_filter):
                counts[cs.key] += 1
                stacks.setdefault(cs.key, cs)
    return [StackRecord(stacks[k], counts[k]) for k in sorted(counts)]


class PairFacts(NamedTuple):
    length_diff: int
    overlap: int
    contained: bool


def evaluate_pair(a: CallStack, n: CallStack) -> PairFacts:
    """Length difference (frames with duplicates), unique overlap and containment for one pair."""
    ov = len(a.unique & n.unique)
    return PairFacts(len(a) - len(n), ov, ov == min(len(a.unique), len(n.unique)))


def _rank(pairs: list[StackPair]) -> list[StackPair]:
    return sorted(pairs, key=lambda p: (-p.score, p.abnormal.key, p.normal.key if p.normal else ""))


def repetitive_pairs(abn: Sequence[StackRecord], norm: Sequence[StackRecord], cfg: StackConfig) -> list[StackPair]:
    """Similar stacks whose abnormal frequency outgrows the normal one.

    Gate: ``len(a) - len(n) < N`` on frame counts and full unique-frame
    containment; score ``freq(a) / freq(n)``.
    """
    out = []
    for a in abn:
        for n in norm:
            facts = evaluate_pair(a.stack, n.stack)
            if facts.length_diff < cfg.len_threshold and facts.contained:
                out.append(StackPair("repetitive", a, n, a.freq / n.freq))
    return _rank(out)


def recursive_pairs(abn: Sequence[StackRecord], norm: Sequence[StackRecord], cfg: StackConfig) -> list[StackPair]:
    """Abnormal stacks much deeper than a contained normal stack.

    Gate: ``len(a) - len(n) > N`` and containment; score
    ``(len(a) - len(n)) / |unique(a) & unique(n)|``.
    """
    out = []
    for a in abn:
        for n in norm:
            facts = evaluate_pair(a.stack, n.stack)
            if facts.length_diff > cfg.len_threshold and facts.contained:
                out.append(StackPair("recursive", a, n, facts.length_diff / facts.overlap))
    return _rank(out)


def disjoint_stacks(abn: Sequence[StackRecord], norm: Sequence[StackRecord], cfg: StackConfig) -> list[StackPair]:
    """Abnormal stacks sharing fewer than ``rho`` frames with every normal stack."""
    out = []
    for a in abn:
        best = 0
        for n in norm:
            best = max(best, evaluate_pair(a.stack, n.stack).overlap)
        if best < cfg.rho:
            out.append(StackPair("disjoint", a, None, float(best)))
    return sorted(out, key=lambda p: (p.score, p.abnormal.key))


DETECTORS = {
    "repetitive": repetitive_pairs,
    "recursive": recursive_pairs,
    "disjoint": disjoint_stacks,
}


def compare_stacks(abn, norm, cfg: StackConfig, kinds=KINDS) -> dict[str, list[StackPair]]:
    return {k: DETECTORS[k](abn, norm, cfg) for k in kinds}
