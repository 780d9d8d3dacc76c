import pytest

from tracediag import EventKind, Frame, MetricSchema, UnknownMetric, extract_series, validate_run
from tracediag.model import Violation

from conftest import make_run

ROWS = [
    (100, 1, "ENTRY", "A/a", [1, 10]),
    (200, 1, "ENTRY", "A/b", [2, 20]),
    (300, 1, "EXIT", "A/b", [3, 30]),
]


def test_well_formed_run_has_no_violations():
    assert validate_run(make_run(ROWS)) == []


def test_arity_violation():
    names = ("a", "b", "c", "d", "e")
    rows = [(1, 1, "ENTRY", "A/a", [1, 2, 3, 4, 5]), (2, 1, "EXIT", "A/a", [1, 2, 3, 4])]
    assert validate_run(make_run(rows, names)) == [Violation("arity", 1)]


def test_time_order_violation():
    rows = [(100, 1, "ENTRY", "A/a", [1, 1]), (50, 1, "ENTRY", "A/b", [1, 1]), (200, 1, "EXIT", "A/b", [1, 1])]
    assert validate_run(make_run(rows)) == [Violation("time_order", 1)]


def test_bad_kind_and_frame():
    run = make_run(ROWS)
    bad = run.events[0].__class__(5, 1, "ENTER", "", "x", (1.0, 2.0))
    from tracediag import Run
    rules = {v.rule for v in validate_run(Run(run.schema, (bad,)))}
    assert rules == {"kind", "frame"}


def test_validate_is_pure():
    run = make_run(ROWS)
    assert validate_run(run) == validate_run(run)


def test_extract_series():
    run = make_run(ROWS)
    assert extract_series(run, "m0") == [(100, 1.0), (200, 2.0), (300, 3.0)]
    assert extract_series(make_run([]), "m0") == []
    with pytest.raises(UnknownMetric):
        extract_series(run, "bogus")


def test_extract_series_preserves_order_and_length():
    run = make_run(ROWS)
    for name in run.schema.names:
        series = extract_series(run, name)
        assert len(series) == len(run.events)
        assert [t for t, _ in series] == [e.timestamp for e in run.events]


@pytest.mark.parametrize("names", [(), ("a", "a"), ("a", "")])
def test_schema_invariants(names):
    with pytest.raises(ValueError):
        MetricSchema(names)


def test_frame_prints_and_parses():
    f = Frame("org/apache/hadoop/dfs/DFSClient", "close")
    assert str(f) == "org/apache/hadoop/dfs/DFSClient/close"
    assert Frame.parse(str(f)) == f


def test_from_events_is_stable_sort():
    rows = [(5, 1, "ENTRY", "A/x", [0, 0]), (5, 2, "ENTRY", "A/y", [0, 0]), (1, 1, "ENTRY", "A/z", [0, 0])]
    run = make_run(rows)
    from tracediag import Run
    ordered = Run.from_events(run.schema, run.events)
    assert [e.method for e in ordered.events] == ["z", "x", "y"]
    assert ordered.events[0].kind == EventKind.ENTRY
