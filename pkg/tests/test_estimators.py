import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tracediag import (
    ClosestRunSelector,
    CorrelationProfiler,
    FaultSpec,
    GenConfig,
    InvalidRun,
    MetricRanker,
    SchemaMismatch,
    StackComparator,
    WindowConfig,
    correlation_vectors,
    make_fixture,
    rank_metrics,
)

from conftest import C, make_run


@pytest.fixture(scope="module")
def fixture():
    cfgs = [GenConfig(seed=30 + i, n_events=800, base_correlation=bc) for i, bc in enumerate((0.9, 0.4))]
    return make_fixture(cfgs[0], FaultSpec("leak", metric="m3", magnitude=20), source=1, normal_configs=cfgs)


@pytest.mark.parametrize("est", [CorrelationProfiler(), MetricRanker(n_windows=3), ClosestRunSelector(top_k=7),
                                 StackComparator(region_filter=C, rho=1)])
def test_params_and_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    key = next(iter(params))
    assert est.set_params(**{key: params[key]}) is est


@pytest.mark.parametrize("est, call", [(MetricRanker(), "rank"), (ClosestRunSelector(), "predict"),
                                       (StackComparator(region_filter=C), "compare")])
def test_not_fitted(est, call, fixture):
    with pytest.raises(NotFittedError):
        getattr(est, call)(fixture[1])


def test_profiler_matches_function(fixture):
    run = fixture[0][0]
    mat = CorrelationProfiler(window_sizes=(32,)).fit(run).transform_matrix(run)
    expected = np.stack([cv.values for cv in correlation_vectors(run, WindowConfig((32,)))])
    assert np.array_equal(mat, expected)


def test_ranker_matches_function(fixture):
    normals, abnormal, _ = fixture
    ranker = MetricRanker().fit(normals[1])
    assert ranker.rank(abnormal) == rank_metrics(correlation_vectors(abnormal), correlation_vectors(normals[1]))
    assert ranker.scores_.shape == (8,)
    assert len(ranker.localize(abnormal, "m3")) <= 3


def test_ranker_schema_mismatch(fixture):
    ranker = MetricRanker().fit(fixture[0][0])
    with pytest.raises(SchemaMismatch):
        ranker.rank(make_run([(i, 1, "ENTRY", "A/a", [i, i * i]) for i in range(40)]))


def test_selector_predicts_source(fixture):
    normals, abnormal, manifest = fixture
    sel = ClosestRunSelector().fit(normals)
    assert sel.predict(abnormal) == manifest.source_run
    assert sel.labels_ == ("normal-0", "normal-1")
    assert sum(sel.selection_.tally.values()) == 25


def test_invalid_run_rejected():
    bad = make_run([(2, 1, "ENTRY", "A/a", [1, 2]), (1, 1, "EXIT", "A/a", [1, 2])])
    with pytest.raises(InvalidRun):
        MetricRanker().fit(bad)


def test_stack_comparator_modes(fixture):
    normals, abnormal, _ = fixture
    assert set(StackComparator(region_filter=C).fit(normals[1]).compare(abnormal)) == {"repetitive", "recursive", "disjoint"}
    assert set(StackComparator(region_filter=C, mode="disjoint").fit(normals[1]).compare(abnormal)) == {"disjoint"}
    with pytest.raises(ValueError):
        StackComparator(region_filter=C, mode="bogus").fit(normals[1])
    with pytest.raises(ValueError):
        StackComparator().fit(normals[1])
