"""Tab-separated trace files and fault manifests.

Trace layout, one event per line::

    #metrics<TAB>name1<TAB>...<TAB>nameM
    timestamp_ns<TAB>thread_id<TAB>ENTRY|EXIT<TAB>region/method<TAB>v1<TAB>...<TAB>vM

Blank lines and ``#`` comment lines after the header are skipped.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError
from .model import EventKind, MetricSchema, Run, TraceEvent

HEADER_TAG = "#metrics"

_INT = re.compile(r"-?[0-9]+")
_FLOAT = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_KINDS = {"ENTRY": EventKind.ENTRY, "EXIT": EventKind.EXIT}


def format_value(v: float) -> str:
    """Shortest decimal that parses back to exactly ``v``."""
    v = float(v)
    if v == 0.0:
        return "-0" if math.copysign(1.0, v) < 0 else "0"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _decode(data) -> list[str]:
    if isinstance(data, str):
        return data.split("\n")
    lines = []
    for i, raw in enumerate(bytes(data).split(b"\n"), start=1):
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError:
            raise ParseError(i, "invalid utf-8") from None
    return lines


def parse_trace(data, label: str = "") -> Run:
    """Parse trace text (``str`` or ``bytes``) into a timestamp-ordered Run."""
    lines = _decode(data)
    if not any(lines):
        raise ParseError(1, "missing header")
    head = lines[0].split("\t")
    if head[0] != HEADER_TAG or len(head) < 2:
        raise ParseError(1, "malformed header")
    try:
        schema = MetricSchema(tuple(head[1:]))
    except ValueError:
        raise ParseError(1, "malformed header") from None
    width = len(schema)

    events = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4 + width:
            raise ParseError(lineno, "wrong arity")
        ts, tid, kind, frame = fields[:4]
        if not _INT.fullmatch(ts):
            raise ParseError(lineno, "non-integer timestamp")
        if not _INT.fullmatch(tid):
            raise ParseError(lineno, "non-integer thread id")
        if kind not in _KINDS:
            raise ParseError(lineno, "unknown event kind")
        region, sep, method = frame.rpartition("/")
        if not sep or not region or not method:
            raise ParseError(lineno, "malformed frame")
        values = []
        for f in fields[4:]:
            if not _FLOAT.fullmatch(f):
                raise ParseError(lineno, "non-numeric metric field")
            v = float(f)
            if not math.isfinite(v):
                raise ParseError(lineno, "non-numeric metric field")
            values.append(v)
        events.append(TraceEvent(int(ts), int(tid), _KINDS[kind], region, method, tuple(values)))
    return Run.from_events(schema, events, label)


def write_trace(run: Run) -> bytes:
    out = [HEADER_TAG + "\t" + "\t".join(run.schema.names)]
    for ev in run.events:
        vals = "\t".join(format_value(v) for v in ev.metrics)
        out.append(f"{ev.timestamp}\t{ev.thread_id}\t{ev.kind.value if isinstance(ev.kind, EventKind) else ev.kind}"
                   f"\t{ev.region}/{ev.method}\t{vals}")
    return ("\n".join(out) + "\n").encode("utf-8")


def read_trace(path, label: str | None = None) -> Run:
    path = Path(path)
    return parse_trace(path.read_bytes(), label=path.stem if label is None else label)


def save_trace(run: Run, path) -> Path:
    path = Path(path)
    path.write_bytes(write_trace(run))
    return path


FAULT_KINDS = ("leak", "repetitive", "recursive", "disjoint")
MANIFEST_KEYS = ("kind", "metric", "region", "method", "onset_index", "source_run", "seed", "magnitude")


@dataclass(frozen=True)
class FaultManifest:
    """Ground truth recorded next to a generated abnormal run."""

    kind: str
    metric: str = ""
    region: str = ""
    method: str = ""
    onset_index: int = 0
    source_run: str = ""
    seed: int = 0
    magnitude: float = 0.0


def dump_manifest(m: FaultManifest) -> bytes:
    rows = [
        ("kind", m.kind), ("metric", m.metric), ("region", m.region), ("method", m.method),
        ("onset_index", str(m.onset_index)), ("source_run", m.source_run), ("seed", str(m.seed)),
        ("magnitude", format_value(m.magnitude)),
    ]
    return "".join(f"{k}\t{v}\n" for k, v in rows).encode("utf-8")


def load_manifest(data) -> FaultManifest:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(_decode(data), start=1):
        if not line:
            continue
        key, sep, value = line.partition("\t")
        if not sep:
            raise ParseError(lineno, "expected key<TAB>value")
        if key not in MANIFEST_KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in fields:
            raise ParseError(lineno, f"duplicate key {key!r}")
        fields[key] = value
    if "kind" not in fields:
        raise ParseError(0, "missing kind")
    if fields["kind"] not in FAULT_KINDS:
        raise ParseError(0, f"unknown fault kind {fields['kind']!r}")
    kw: dict = {k: fields[k] for k in ("kind", "metric", "region", "method", "source_run") if k in fields}
    try:
        if "onset_index" in fields:
            kw["onset_index"] = int(fields["onset_index"])
        if "seed" in fields:
            kw["seed"] = int(fields["seed"])
        if "magnitude" in fields:
            kw["magnitude"] = float(fields["magnitude"])
    except ValueError as exc:
        raise ParseError(0, f"bad numeric field: {exc}") from None
    return FaultManifest(**kw)
