import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracediag import (
    FaultSpec,
    GenConfig,
    LengthMismatch,
    NoComparableWindows,
    WindowConfig,
    WindowTooSmall,
    correlation_vector,
    correlation_vectors,
    make_fixture,
    make_windows,
    nn_distances,
    pearson,
    window_distance,
)
from tracediag.correlation import Window, metric_pairs

import oracles
from conftest import run_from_matrix
from strategies import moderate


@pytest.mark.parametrize("x, y, r", [([1, 2, 3], [2, 4, 6], 1.0), ([1, 2, 3], [3, 2, 1], -1.0), ([5, 5, 5], [1, 2, 3], 0.0)])
def test_pearson_examples(x, y, r):
    assert pearson(x, y) == r


def test_pearson_errors():
    with pytest.raises(LengthMismatch):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        pearson([1], [1])


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 30).flatmap(lambda n: st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n)), st.data())
def test_pearson_symmetric_and_scale_free(x, data):
    y = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(x), max_size=len(x)))
    assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-12)
    assert pearson([2.5 * v for v in x], y) == pytest.approx(pearson(x, y), abs=1e-9)


def _run(n, m=2):
    return run_from_matrix([[i * (j + 1) + (i % 3) * j for j in range(m)] for i in range(n)])


@pytest.mark.parametrize("n, sizes, stride, starts", [
    (10, (4,), 0.5, [0, 2, 4, 6, 8]),
    (3, (4,), 0.5, [0]),
    (8, (4,), 1.0, [0, 4]),
    (7, (4,), 0.5, [0, 2, 4]),
    (5, (4,), 0.1, [0, 1, 2, 3]),
])
def test_window_starts(n, sizes, stride, starts):
    windows = make_windows(_run(n), WindowConfig(sizes=sizes, stride_fraction=stride))
    assert [w.start for w in windows] == starts
    assert all(len(w) == min(4, n - w.start) for w in windows)


def test_partial_last_window_and_size_order():
    windows = make_windows(_run(10), WindowConfig(sizes=(4, 8)))
    assert [(w.size_class, w.start, len(w)) for w in windows][-3:] == [(8, 0, 8), (8, 4, 6), (8, 8, 2)]
    assert len(windows[4]) == 2


@pytest.mark.parametrize("bad", [dict(sizes=(1,)), dict(sizes=()), dict(sizes=(4, 4)), dict(stride_fraction=0.0),
                                 dict(stride_fraction=1.5)])
def test_window_config_rejects(bad):
    with pytest.raises(ValueError):
        WindowConfig(**bad)


@pytest.mark.parametrize("m, length", [(2, 1), (3, 3), (11, 55)])
def test_vector_length(m, length):
    cvs = correlation_vectors(_run(40, m), WindowConfig(sizes=(8,)))
    assert all(len(cv) == length for cv in cvs)
    assert len(metric_pairs(m)) == length


def test_identical_series_correlate_fully():
    cv = correlation_vectors(run_from_matrix([[i, i, 5 - i] for i in range(6)]), WindowConfig(sizes=(6,)))[0]
    assert list(cv.values) == [1.0, -1.0, -1.0]


def test_single_sample_window_is_too_small():
    run = _run(4)
    with pytest.raises(WindowTooSmall):
        correlation_vector(Window("r", 4, 3, run.values[3:4]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4).flatmap(
    lambda m: st.lists(st.lists(moderate, min_size=m, max_size=m), min_size=2, max_size=40)))
def test_vectors_match_direct_computation(rows):
    for cv in correlation_vectors(run_from_matrix(rows), WindowConfig(sizes=(3, 7, 16))):
        expected = oracles.corr_vector(rows[cv.window.start:cv.window.start + len(cv.window)])
        assert np.allclose(cv.values, expected, rtol=0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.permutations(range(4)), st.lists(st.lists(st.integers(-5, 5), min_size=4, max_size=4), min_size=8, max_size=8))
def test_metric_permutation_permutes_components(perm, rows):
    cfg = WindowConfig(sizes=(8,))
    base = correlation_vectors(run_from_matrix(rows), cfg)[0].values
    shuffled = correlation_vectors(run_from_matrix([[r[p] for p in perm] for r in rows]), cfg)[0].values
    index = {pair: k for k, pair in enumerate(metric_pairs(4))}
    for k, (i, j) in enumerate(metric_pairs(4)):
        a, b = sorted((perm[i], perm[j]))
        assert shuffled[k] == pytest.approx(base[index[(a, b)]], abs=1e-12)


def test_window_distance():
    assert window_distance([0.3, -0.2], [0.3, -0.2]) == 0.0
    assert window_distance([1, 0], [0, 1]) == math.sqrt(2)
    assert window_distance([1, 0.5], [0, 1]) == window_distance([0, 1], [1, 0.5])
    with pytest.raises(LengthMismatch):
        window_distance([1], [1, 2])


def test_nn_identity_is_zero():
    run = make_fixture(GenConfig(seed=4, n_events=400), FaultSpec("leak", metric="m1"))[0][0]
    cvs = correlation_vectors(run)
    dists = nn_distances(cvs, cvs)
    assert all(d.distance == 0.0 and d.normal_window == d.abnormal_window for d in dists)


def test_single_normal_window_is_forced_pairing():
    abn = correlation_vectors(_run(30, 3).with_label("a"), WindowConfig(sizes=(8,)))
    norm = correlation_vectors(run_from_matrix([[1, 2, 4], [2, 1, 3], [5, 5, 0]], "n"), WindowConfig(sizes=(8,)))
    assert {d.normal_window.start for d in nn_distances(abn, norm)} == {0}


def test_missing_size_class_and_mixed_runs():
    abn = correlation_vectors(_run(30), WindowConfig(sizes=(4, 8)))
    with pytest.raises(NoComparableWindows):
        nn_distances(abn, correlation_vectors(_run(30), WindowConfig(sizes=(4,))))
    mixed = correlation_vectors(_run(10).with_label("x"), WindowConfig(sizes=(4,))) + \
        correlation_vectors(_run(10).with_label("y"), WindowConfig(sizes=(4,)))
    with pytest.raises(ValueError):
        nn_distances(abn, mixed)


def test_leak_windows_farther_after_onset():
    normals, abnormal, manifest = make_fixture(GenConfig(seed=11), FaultSpec("leak", metric="m3", magnitude=50))
    dists = nn_distances(correlation_vectors(abnormal), correlation_vectors(normals[0]))
    pre = [d.distance for d in dists if d.abnormal_window.start + d.abnormal_window.size <= manifest.onset_index]
    post = [d.distance for d in dists if d.abnormal_window.start >= manifest.onset_index]
    assert np.mean(post) > np.mean(pre)
