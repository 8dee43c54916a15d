"""Kernel mean maps and the point-set kernel.

The mean map of a set ``G`` is the average of its members' one-hot feature
vectors.  Because every member contributes exactly one unit per block, the
map is stored as integer cell occupancy counts plus the member count; the
real-valued weights are ``counts / size``.  Keeping counts makes incremental
insertion and removal exact, so a map maintained by updates is bit-identical
to one rebuilt from scratch.

Similarity of a point to a set is the dot product of the point's feature
vector with the set's mean map, scaled by ``1/t`` so that it lies in [0, 1]
and a singleton is fully similar to its own member.  Evaluating it reads one
weight per block, independent of ``|G|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import InvalidInputError


@dataclass(frozen=True, eq=False)
class MeanMap:
    """Kernel mean map of a point set.

    Attributes:
        counts: (t, psi) int64 cell occupancy of the members.
        size: Number of members aggregated.
    """

    counts: np.ndarray = field(repr=False)
    size: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2:
            raise InvalidInputError(f"counts must be 2-D (t, psi), got shape {c.shape}")
        c = np.ascontiguousarray(c)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        if self.size < 0:
            raise InvalidInputError("size must be non-negative")

    @property
    def t(self) -> int:
        return self.counts.shape[0]

    @property
    def psi(self) -> int:
        return self.counts.shape[1]

    @property
    def weights(self) -> np.ndarray:
        """Dense (t * psi,) weight vector; each block of ``psi`` sums to 1."""
        if self.size == 0:
            return np.zeros(self.counts.size)
        return (self.counts / self.size).reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, MeanMap):
            return NotImplemented
        return self.size == other.size and np.array_equal(self.counts, other.counts)


def _as_codes(codes) -> np.ndarray:
    c = np.asarray(codes)
    if c.ndim == 1:
        c = c[None, :]
    return np.ascontiguousarray(c, dtype=np.int32)


def mean_map(codes, psi: int, members=None) -> MeanMap:
    """Mean map of the points whose codes are given.

    Args:
        codes: (n, t) feature codes.
        psi: Cells per block.
        members: Optional row indices into ``codes``; all rows when omitted.
    """
    codes = _as_codes(codes)
    rows = np.arange(codes.shape[0]) if members is None else np.asarray(members, dtype=np.int64)
    if rows.size == 0:
        raise InvalidInputError("cannot build the mean map of an empty set")
    counts = _kernels.block_counts(codes, rows, codes.shape[1], psi)
    return MeanMap(counts, int(rows.size))


def add_members(mm: MeanMap, new_codes) -> MeanMap:
    """Mean map of the union of ``mm``'s members with ``new_codes``.

    The caller guarantees the new members are not already aggregated.
    """
    new_codes = np.asarray(new_codes)
    if new_codes.size == 0:
        return mm
    new_codes = _as_codes(new_codes)
    _check_blocks(new_codes, mm)
    delta = _kernels.block_counts(new_codes, np.arange(new_codes.shape[0]), mm.t, mm.psi)
    return MeanMap(mm.counts + delta, mm.size + new_codes.shape[0])


def remove_members(mm: MeanMap, old_codes) -> MeanMap:
    """Mean map after taking the points with ``old_codes`` out of the set."""
    old_codes = np.asarray(old_codes)
    if old_codes.size == 0:
        return mm
    old_codes = _as_codes(old_codes)
    _check_blocks(old_codes, mm)
    delta = _kernels.block_counts(old_codes, np.arange(old_codes.shape[0]), mm.t, mm.psi)
    counts = mm.counts - delta
    if np.any(counts < 0):
        raise InvalidInputError("removed points were not members of the set")
    return MeanMap(counts, mm.size - old_codes.shape[0])


def _check_blocks(codes: np.ndarray, mm: MeanMap) -> None:
    if codes.shape[1] != mm.t:
        raise InvalidInputError(f"code has {codes.shape[1]} blocks, mean map has {mm.t}")


def psk_similarity(code, mm: MeanMap) -> float:
    """Point-set similarity of one point (given by its code) to a set."""
    code = np.asarray(code).reshape(-1)
    if code.shape[0] != mm.t:
        raise InvalidInputError(f"code has {code.shape[0]} blocks, mean map has {mm.t}")
    if mm.size == 0:
        return 0.0
    total = int(mm.counts[np.arange(mm.t), code].sum())
    return total / (mm.size * mm.t)


def similarity_sums(codes: np.ndarray, mm: MeanMap, rows=None) -> np.ndarray:
    """Integer numerators ``sum_b counts[b, code_b]`` for many points.

    Similarities are these divided by ``size * t``; comparing the integers
    keeps argmax ties exact.
    """
    codes = _as_codes(codes)
    _check_blocks(codes, mm)
    if rows is None:
        rows = np.arange(codes.shape[0])
    return _kernels.gather_sums(codes, rows, mm.counts)


def similarities(codes, mm: MeanMap, rows=None) -> np.ndarray:
    """Point-set similarity of many points to one set."""
    sums = similarity_sums(codes, mm, rows)
    if mm.size == 0:
        return np.zeros(sums.shape[0])
    return sums / (mm.size * mm.t)


@dataclass
class SimilarityProfile:
    """Per-point maximum similarity over a collection of sets, and which set attains it."""

    values: np.ndarray
    argmax_cluster: np.ndarray


def similarity_profile(codes, maps) -> SimilarityProfile:
    """Maximum point-set similarity of every point over ``maps``; ties go to the lowest id."""
    maps = list(maps)
    if not maps:
        raise InvalidInputError("at least one set is required")
    codes = _as_codes(codes)
    sims = np.stack([similarities(codes, m) for m in maps], axis=1)
    best = np.argmax(sims, axis=1)
    return SimilarityProfile(sims[np.arange(sims.shape[0]), best], best)
