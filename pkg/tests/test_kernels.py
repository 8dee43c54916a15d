"""Compiled kernels agree with their NumPy fallbacks."""

import numpy as np
import pytest

from pskc import _kernels

needs_numba = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")


@pytest.fixture
def problem():
    g = np.random.default_rng(8)
    X = g.normal(size=(500, 4))
    centres = X[g.choice(500, size=(30, 12))]  # (t, psi, d)
    return X, np.ascontiguousarray(centres)


@needs_numba
def test_nearest_cells_agree(problem):
    X, centres = problem
    np.testing.assert_array_equal(
        _kernels._nearest_cells_nb(X, centres), _kernels._nearest_cells_numpy(X, centres)
    )


@needs_numba
def test_ties_resolve_to_lowest_index_in_both():
    X = np.array([[5.0], [0.0], [10.0]])
    centres = np.array([[[0.0], [10.0]], [[10.0], [0.0]], [[3.0], [3.0]]])
    expected = [[0, 0, 0], [0, 1, 0], [1, 0, 0]]
    assert _kernels._nearest_cells_nb(X, centres).tolist() == expected
    assert _kernels._nearest_cells_numpy(X, centres).tolist() == expected


def test_numpy_path_chunks(problem, monkeypatch):
    X, centres = problem
    full = _kernels._nearest_cells_numpy(X, centres)
    monkeypatch.setattr(_kernels, "_CHUNK_ELEMENTS", 100)
    np.testing.assert_array_equal(_kernels._nearest_cells_numpy(X, centres), full)


@needs_numba
def test_gather_and_counts_agree(problem):
    X, centres = problem
    codes = _kernels.nearest_cells(X, centres)
    rows = np.arange(0, 500, 3, dtype=np.int64)
    nb = _kernels._block_counts_nb(codes, rows, 30, 12)
    np_ = _kernels._block_counts_numpy(codes, rows, 30, 12)
    np.testing.assert_array_equal(nb, np_)
    assert nb.sum() == rows.size * 30
    np.testing.assert_array_equal(
        _kernels._gather_sums_nb(codes, rows, nb), _kernels._gather_sums_numpy(codes, rows, nb)
    )


def test_dispatch_without_numba(problem, monkeypatch):
    X, centres = problem
    expected = _kernels.nearest_cells(X, centres)
    rows = np.arange(500)
    counts = _kernels.block_counts(expected, rows, 30, 12)
    sums = _kernels.gather_sums(expected, rows, counts)
    monkeypatch.setattr(_kernels, "NUMBA_AVAILABLE", False)
    np.testing.assert_array_equal(_kernels.nearest_cells(X, centres), expected)
    np.testing.assert_array_equal(_kernels.block_counts(expected, rows, 30, 12), counts)
    np.testing.assert_array_equal(_kernels.gather_sums(expected, rows, counts), sums)


def test_threads_from_env(monkeypatch):
    monkeypatch.setenv("PSKC_THREADS", "3")
    assert _kernels.threads_from_env(8) == 3
    monkeypatch.setenv("PSKC_THREADS", "many")
    assert _kernels.threads_from_env(8) == 8
    monkeypatch.delenv("PSKC_THREADS")
    assert _kernels.threads_from_env(None) is None


def test_set_num_threads_is_safe():
    _kernels.set_num_threads(1)
    _kernels.set_num_threads(None)
    _kernels.set_num_threads(10_000)
