import pytest

from tracediag.model import EventKind, MetricSchema, Run, TraceEvent

C = "org/example/io/Client"
M = "org/example/app/Main"
B = "org/example/io/BlockMap"
N = "org/example/net/Channel"

# retried / recursing method keeps its work inside its own region
LOCAL_CALLS = (
    (f"{M}/main", (f"{C}/f", f"{B}/lookup")),
    (f"{M}/serve", (f"{N}/send", f"{C}/h")),
    (f"{M}/shutdown", (f"{B}/update", f"{N}/ack")),
    (f"{C}/f", (f"{C}/g",)),
    (f"{C}/g", (f"{C}/h",)),
    (f"{B}/lookup", (f"{B}/update",)),
    (f"{N}/send", (f"{N}/recv",)),
)

# f is a leaf called straight from the entry point: normal stack [main, f]
SHALLOW_CALLS = (
    (f"{M}/main", (f"{C}/f", f"{C}/g")),
    (f"{M}/serve", (f"{C}/h", f"{N}/send")),
    (f"{C}/g", (f"{C}/h",)),
    (f"{N}/send", (f"{N}/recv",)),
)


def make_run(rows, names=("m0", "m1"), label="r"):
    """rows: (timestamp, thread, kind, "region/method", values)."""
    events = []
    for ts, tid, kind, frame, vals in rows:
        region, _, method = frame.rpartition("/")
        events.append(TraceEvent(ts, tid, EventKind(kind), region, method, tuple(vals)))
    return Run(MetricSchema(tuple(names)), tuple(events), label)


def run_from_matrix(values, label="r", names=None, frames=None):
    """Alternating ENTRY/EXIT run carrying the given sample matrix."""
    values = [list(map(float, row)) for row in values]
    m = len(values[0]) if values else 2
    names = names or tuple(f"m{j}" for j in range(m))
    rows = []
    for i, row in enumerate(values):
        frame = frames[i] if frames else "A/a"
        kind = "ENTRY" if i % 2 == 0 else "EXIT"
        rows.append((i, 1, kind, frame, row))
    return make_run(rows, names, label)


_RESULTS = []


@pytest.fixture
def record_criterion():
    def record(name, passed, detail=""):
        _RESULTS.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
