"""Nearest-neighbour Isolation Kernel (aNNE).

A model holds ``t`` independent random subsamples of ``psi`` points each.  In
every subsample the points act as Voronoi centres; a point's feature vector
records, per subsample, which cell it falls in.  Two points are similar in
proportion to the number of subsamples in which they share a cell, which is
what makes the kernel adapt to local density: cells are small where data are
dense and large where data are sparse.

The feature map is one-hot per block, so it is stored as ``t`` integer cell
ids per point (a "code") rather than as a ``t * psi`` binary vector.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .exceptions import DataFormatError, InvalidInputError, InvalidParameterError

_MAGIC = b"PSKCIK01"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIIIq")  # magic, version, d, psi, t, seed


def as_dataset(data, min_points=1) -> np.ndarray:
    """Validate ``data`` as an (n, d) float64 array of finite values."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise InvalidInputError(f"expected a 2-D array of points, got shape {X.shape}")
    n, d = X.shape
    if n == 0:
        raise InvalidInputError("dataset is empty")
    if d < 1:
        raise InvalidInputError("points must have at least one coordinate")
    if n < min_points:
        raise InvalidInputError(f"need at least {min_points} points, got {n}")
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0, 0])
        raise InvalidInputError(f"point {bad} has a non-finite coordinate")
    return np.ascontiguousarray(X)


@dataclass(frozen=True)
class KernelParams:
    """Isolation Kernel settings.

    Attributes:
        psi: Subsample size, i.e. Voronoi cells per partitioning.
        t: Number of partitionings.
        rng_seed: Seed for the subsampling.
    """

    psi: int
    t: int = 100
    rng_seed: int = 42

    def __post_init__(self):
        if int(self.psi) != self.psi or self.psi < 2:
            raise InvalidParameterError(f"psi must be an integer >= 2, got {self.psi}")
        if int(self.t) != self.t or self.t < 1:
            raise InvalidParameterError(f"t must be an integer >= 1, got {self.t}")


@dataclass(frozen=True, eq=False)
class PartitioningModel:
    """``t`` blocks of ``psi`` Voronoi centres, coordinates copied from the data."""

    centres: np.ndarray = field(repr=False)  # (t, psi, d) float64, read-only
    rng_seed: int = 0

    def __post_init__(self):
        c = np.array(self.centres, dtype=np.float64, order="C")
        if c.ndim != 3:
            raise InvalidInputError(f"centres must have shape (t, psi, d), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("centres must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "centres", c)
        # seeds are kept in signed 64-bit form so they survive serialization
        object.__setattr__(self, "rng_seed", ((int(self.rng_seed) + 2**63) % 2**64) - 2**63)

    @property
    def t(self) -> int:
        return self.centres.shape[0]

    @property
    def psi(self) -> int:
        return self.centres.shape[1]

    @property
    def d(self) -> int:
        return self.centres.shape[2]

    def __eq__(self, other):
        if not isinstance(other, PartitioningModel):
            return NotImplemented
        return self.rng_seed == other.rng_seed and np.array_equal(self.centres, other.centres)

    def __hash__(self):
        return hash((self.rng_seed, self.centres.tobytes()))


def block_rng(rng_seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one partitioning, keyed by (seed, block)."""
    seq = np.random.SeedSequence([int(rng_seed) & 0xFFFFFFFFFFFFFFFF, int(block)])
    return np.random.Generator(np.random.Philox(seq))


def build_model(data, params: KernelParams) -> PartitioningModel:
    """Sample ``t`` subsets of ``psi`` distinct points uniformly without replacement.

    Each block draws from its own generator, so block ``i`` does not depend on
    how many blocks precede it.
    """
    X = as_dataset(data)
    n, d = X.shape
    if params.psi > n:
        raise InvalidParameterError(f"psi ({params.psi}) must not exceed the number of points ({n})")
    centres = np.empty((params.t, params.psi, d), dtype=np.float64)
    for b in range(params.t):
        idx = block_rng(params.rng_seed, b).choice(n, size=params.psi, replace=False)
        centres[b] = X[idx]
    return PartitioningModel(centres, rng_seed=int(params.rng_seed))


def _check_point(model: PartitioningModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.d:
        raise InvalidInputError(f"point has dimension {x.shape[0]}, model expects {model.d}")
    return x


def cell_index(model: PartitioningModel, block: int, x) -> int:
    """Index of the centre in ``block`` nearest to ``x`` (lowest index on ties)."""
    if not 0 <= block < model.t:
        raise InvalidInputError(f"block {block} out of range [0, {model.t})")
    x = _check_point(model, x)
    diff = model.centres[block] - x
    return int(np.argmin(np.einsum("ij,ij->i", diff, diff)))


def embed(model: PartitioningModel, x) -> np.ndarray:
    """Feature code of a single point: ``t`` cell ids."""
    x = _check_point(model, x)
    return _kernels.nearest_cells(x[None, :], model.centres)[0]


def embed_many(model: PartitioningModel, X) -> np.ndarray:
    """Feature codes of all rows of ``X``, shape (n, t), int32."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if model.d == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise InvalidInputError(f"points have shape {X.shape}, model expects dimension {model.d}")
    return _kernels.nearest_cells(X, model.centres)


def one_hot(code, psi: int) -> np.ndarray:
    """Expand a code to the explicit binary feature vector of length ``t * psi``."""
    code = np.asarray(code)
    out = np.zeros((code.shape[-1], psi), dtype=np.float64)
    out[np.arange(code.shape[-1]), code] = 1.0
    return out.reshape(-1)


def kappa(model: PartitioningModel, x, y) -> float:
    """Fraction of partitionings in which ``x`` and ``y`` share a Voronoi cell."""
    cx = embed(model, x)
    cy = embed(model, y)
    return int(np.count_nonzero(cx == cy)) / model.t


def gram_matrix(model: PartitioningModel, X) -> np.ndarray:
    """Pairwise kernel matrix of the rows of ``X``."""
    codes = embed_many(model, X)
    m = codes.shape[0]
    G = np.empty((m, m), dtype=np.float64)
    for i in range(m):
        G[i] = np.count_nonzero(codes == codes[i], axis=1) / model.t
    return G


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_model(model: PartitioningModel, path) -> None:
    """Write ``model`` as a little-endian binary file.

    Layout: 8-byte magic, uint32 version, uint32 d, uint32 psi, uint32 t,
    int64 seed, then ``t * psi * d`` float64 centre coordinates row-major.
    """
    path = Path(path)
    header = _HEADER.pack(_MAGIC, _FORMAT_VERSION, model.d, model.psi, model.t, model.rng_seed)
    with path.open("wb") as fh:
        fh.write(header)
        fh.write(model.centres.astype("<f8", copy=False).tobytes(order="C"))


def load_model(path) -> PartitioningModel:
    """Read a model written by :func:`save_model`."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError("truncated model header", path=path)
    magic, version, d, psi, t, seed = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise DataFormatError("not a psKC model file", path=path)
    if version != _FORMAT_VERSION:
        raise DataFormatError(f"unsupported model version {version}", path=path)
    expected = _HEADER.size + 8 * t * psi * d
    if len(raw) != expected:
        raise DataFormatError(f"expected {expected} bytes, found {len(raw)}", path=path)
    centres = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(t, psi, d)
    return PartitioningModel(centres.astype(np.float64), rng_seed=seed)
