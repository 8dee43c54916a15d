"""
Hot loops: Voronoi cell assignment and point-set similarity gathers.

Each kernel has a Numba-compiled version (parallel over points) and a plain
NumPy reference.  The public modules call the dispatchers at the bottom of
this file, which pick the compiled path when Numba imports cleanly.

Both paths compute squared Euclidean distances as an explicit sum of squared
coordinate differences, never via the ``|x|^2 - 2x.z + |z|^2`` expansion, so
exact geometric ties (a point equidistant from two centres) stay exact and
the lowest centre index wins in both implementations.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


# Element budget for the temporary (chunk, psi, d) array in the NumPy path.
_CHUNK_ELEMENTS = 1 << 22


def set_num_threads(n):
    """Set the worker count used by the compiled kernels (no-op without Numba)."""
    if NUMBA_AVAILABLE and n is not None and n > 0:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))


def threads_from_env(default=None):
    """Thread count from ``PSKC_THREADS``, falling back to ``default``."""
    value = os.environ.get("PSKC_THREADS")
    if value:
        try:
            return int(value)
        except ValueError:
            pass
    return default


# ---------------------------------------------------------------------------
# Voronoi assignment
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _nearest_cells_nb(X, centres):
    n, d = X.shape
    t, psi, _ = centres.shape
    out = np.empty((n, t), dtype=np.int32)
    for r in prange(n):
        for b in range(t):
            best = 0
            best_d = np.inf
            for c in range(psi):
                acc = 0.0
                for k in range(d):
                    diff = X[r, k] - centres[b, c, k]
                    acc += diff * diff
                if acc < best_d:
                    best_d = acc
                    best = c
            out[r, b] = best
    return out


def _nearest_cells_numpy(X, centres):
    n, d = X.shape
    t, psi, _ = centres.shape
    out = np.empty((n, t), dtype=np.int32)
    chunk = max(1, _CHUNK_ELEMENTS // max(1, psi * d))
    for b in range(t):
        C = centres[b]
        for start in range(0, n, chunk):
            diff = X[start:start + chunk, None, :] - C[None, :, :]
            dist = np.einsum("ijk,ijk->ij", diff, diff)
            # argmin returns the first minimum: lowest centre index on ties
            out[start:start + chunk, b] = np.argmin(dist, axis=1)
    return out


# ---------------------------------------------------------------------------
# Point-set similarity: sum over blocks of counts[block, code]
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _gather_sums_nb(codes, rows, counts):
    m = rows.shape[0]
    t = codes.shape[1]
    out = np.empty(m, dtype=np.int64)
    for j in prange(m):
        r = rows[j]
        acc = 0
        for b in range(t):
            acc += counts[b, codes[r, b]]
        out[j] = acc
    return out


def _gather_sums_numpy(codes, rows, counts):
    t = codes.shape[1]
    sub = codes[rows]
    return counts[np.arange(t)[None, :], sub].sum(axis=1, dtype=np.int64)


@njit(cache=True)
def _block_counts_nb(codes, rows, t, psi):
    counts = np.zeros((t, psi), dtype=np.int64)
    for j in range(rows.shape[0]):
        r = rows[j]
        for b in range(t):
            counts[b, codes[r, b]] += 1
    return counts


def _block_counts_numpy(codes, rows, t, psi):
    sub = codes[rows].astype(np.int64) + (np.arange(t, dtype=np.int64) * psi)[None, :]
    flat = np.bincount(sub.ravel(), minlength=t * psi)
    return flat.reshape(t, psi).astype(np.int64)


# ---------------------------------------------------------------------------
# Dispatchers
# ---------------------------------------------------------------------------

def nearest_cells(X, centres):
    """Cell index of every row of ``X`` in every block: shape (n, t), int32."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    centres = np.ascontiguousarray(centres, dtype=np.float64)
    if NUMBA_AVAILABLE:
        return _nearest_cells_nb(X, centres)
    return _nearest_cells_numpy(X, centres)


def gather_sums(codes, rows, counts):
    """``sum_b counts[b, codes[r, b]]`` for each ``r`` in ``rows`` (int64)."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if NUMBA_AVAILABLE:
        return _gather_sums_nb(codes, rows, counts)
    return _gather_sums_numpy(codes, rows, counts)


def block_counts(codes, rows, t, psi):
    """Per-block cell occupancy of the points in ``rows``: shape (t, psi)."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if NUMBA_AVAILABLE:
        return _block_counts_nb(codes, rows, t, psi)
    return _block_counts_numpy(codes, rows, t, psi)
