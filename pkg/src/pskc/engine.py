"""Cluster growth under the point-set similarity.

Clusters are found one at a time.  The seed is the remaining point most
similar to the set of all remaining points.  Its most similar partner joins
it, and the pair is grown by repeatedly re-selecting every remaining point
whose similarity to the current cluster exceeds a threshold ``gamma``; after
each round ``gamma`` shrinks by the factor ``1 - rho``.  Growth ends when
``gamma`` reaches ``tau``, so each cluster needs at most
``floor(log tau / log(1 - rho))`` rounds regardless of the data size.  The
outer loop stops when no seed pair is similar enough or fewer than two
points remain; whatever is left is noise.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import InvalidInputError, InvalidParameterError
from .isolation import KernelParams, PartitioningModel, as_dataset, build_model, embed_many
from .pointset import (
    MeanMap,
    mean_map,
    remove_members,
    similarities,
    similarity_profile,
    similarity_sums,
)

logger = logging.getLogger(__name__)

NOISE = -1


@dataclass(frozen=True)
class PskcParams:
    """Clustering settings.

    Attributes:
        tau: Similarity threshold in (0, 1); growth stops once ``gamma`` falls to it.
        rho: Growth rate in (0, 1); ``gamma`` is multiplied by ``1 - rho`` each round.
        kernel: Isolation Kernel settings.
    """

    tau: float
    rho: float = 0.1
    kernel: KernelParams = field(default_factory=lambda: KernelParams(psi=16))

    def __post_init__(self):
        _check_unit_interval("tau", self.tau)
        _check_unit_interval("rho", self.rho)


def _check_unit_interval(name, value):
    if not (isinstance(value, (int, float)) and 0.0 < float(value) < 1.0):
        raise InvalidParameterError(f"{name} must be in (0,1), got {value!r}")


def max_iterations(tau: float, rho: float) -> int:
    """Upper bound on growth rounds per cluster: ``floor(log tau / log(1 - rho))``."""
    _check_unit_interval("tau", tau)
    _check_unit_interval("rho", rho)
    ratio = math.log(tau) / math.log1p(-rho)
    # absorb rounding when the ratio is an exact integer in real arithmetic
    return int(math.floor(ratio + 1e-9))


@dataclass
class ClusterState:
    """A cluster as returned by :func:`grow_cluster`."""

    id: int
    members: np.ndarray
    map: MeanMap
    iterations_used: int
    gamma_history: list[float]
    seed: int
    partner: int


@dataclass
class Timings:
    model_build_s: float = 0.0
    embed_s: float = 0.0
    cluster_s: float = 0.0
    post_s: float = 0.0

    @property
    def total_s(self) -> float:
        return self.model_build_s + self.embed_s + self.cluster_s + self.post_s


@dataclass
class ClusteringResult:
    """Outcome of a clustering run.

    ``labels`` holds a cluster id ``>= 0`` per point or ``-1`` for noise.
    ``per_cluster_iterations`` and ``gamma_history`` describe the growth of
    each cluster; ``objective`` is the total within-cluster point-set
    similarity of the labelling.
    """

    labels: np.ndarray
    k: int
    per_cluster_iterations: list[int]
    gamma_history: list[list[float]]
    objective: float
    seeds: list[int] = field(default_factory=list)
    tau: float | None = None
    rho: float | None = None
    reassigned: int = 0
    timings: Timings = field(default_factory=Timings)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def noise_count(self) -> int:
        return int(np.count_nonzero(self.labels == NOISE))

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.labels == j)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def cluster_maps(codes: np.ndarray, labels: np.ndarray, psi: int) -> list[MeanMap]:
    """Mean map of every non-empty cluster id ``0 .. max(labels)``."""
    k = int(labels.max()) + 1 if labels.size and labels.max() >= 0 else 0
    return [mean_map(codes, psi, np.flatnonzero(labels == j)) for j in range(k)]


def objective(codes: np.ndarray, labels: np.ndarray, psi: int) -> float:
    """Sum over clusters of each member's similarity to its own cluster.

    For one cluster this equals ``sum(counts**2) / (|G| * t)``, which is what
    is evaluated; noise contributes nothing.
    """
    codes = np.asarray(codes)
    t = codes.shape[1]
    total = 0.0
    for mm in cluster_maps(codes, labels, psi):
        total += float(np.sum(mm.counts.astype(np.float64) ** 2)) / (mm.size * t)
    return total


# ---------------------------------------------------------------------------
# Algorithm steps
# ---------------------------------------------------------------------------

def select_seed(codes: np.ndarray, remaining: np.ndarray, remaining_map: MeanMap) -> int | None:
    """Remaining point most similar to the remaining set, or None if fewer than two remain.

    ``remaining`` must be sorted so that ``argmax`` resolves ties to the lowest index.
    """
    if remaining.shape[0] < 2:
        return None
    sums = similarity_sums(codes, remaining_map, remaining)
    return int(remaining[int(np.argmax(sums))])


def grow_cluster(
    codes: np.ndarray,
    seed: int,
    remaining: np.ndarray,
    tau: float,
    rho: float,
    psi: int,
    cluster_id: int = 0,
) -> ClusterState | None:
    """Grow one cluster from ``seed`` over the sorted index array ``remaining``.

    Returns None when the seed's best partner is not similar enough, which
    ends the outer loop.  Each round re-selects from all of ``remaining``, so
    a point admitted earlier can drop out again.  A round that selects
    nothing ends growth with the previous set.
    """
    t = codes.shape[1]
    others = remaining[remaining != seed]
    if others.shape[0] == 0:
        return None
    matches = np.count_nonzero(codes[others] == codes[seed], axis=1)
    best = int(np.argmax(matches))
    partner = int(others[best])
    gamma = (1.0 - rho) * (int(matches[best]) / t)
    if gamma <= tau:
        return None

    members = np.array(sorted((seed, partner)), dtype=np.int64)
    mm = mean_map(codes, psi, members)
    history: list[float] = []
    while gamma > tau:
        sims = similarities(codes, mm, remaining)
        selected = remaining[sims > gamma]
        history.append(gamma)
        gamma *= 1.0 - rho
        if selected.shape[0] == 0:
            break
        members = selected
        mm = mean_map(codes, psi, members)

    bound = max_iterations(tau, rho)
    if len(history) > bound:  # pragma: no cover - guaranteed by gamma_0 <= 1 - rho
        raise RuntimeError(f"cluster used {len(history)} rounds, bound is {bound}")
    return ClusterState(cluster_id, members, mm, len(history), history, seed, partner)


def _settle_noise(codes, labels, psi, tau) -> int:
    """Attach leftover points with similarity above ``tau`` to some cluster.

    Repeats until every remaining noise point has similarity at most ``tau``
    to every cluster under the final mean maps.  Returns how many were attached.
    """
    attached = 0
    while True:
        noise = np.flatnonzero(labels == NOISE)
        if noise.size == 0 or labels.max() < 0:
            return attached
        prof = similarity_profile(codes[noise], cluster_maps(codes, labels, psi))
        hit = prof.values > tau
        if not np.any(hit):
            return attached
        labels[noise[hit]] = prof.argmax_cluster[hit]
        attached += int(np.count_nonzero(hit))


def cluster_codes(codes: np.ndarray, psi: int, tau: float, rho: float) -> ClusteringResult:
    """Run the clustering loop on already embedded points."""
    _check_unit_interval("tau", tau)
    _check_unit_interval("rho", rho)
    codes = np.ascontiguousarray(codes, dtype=np.int32)
    n = codes.shape[0]
    if n < 2:
        raise InvalidInputError(f"clustering needs at least 2 points, got {n}")

    labels = np.full(n, NOISE, dtype=np.int64)
    remaining = np.arange(n, dtype=np.int64)
    remaining_map = mean_map(codes, psi)
    iterations: list[int] = []
    gammas: list[list[float]] = []
    seeds: list[int] = []

    while remaining.shape[0] > 1:
        seed = select_seed(codes, remaining, remaining_map)
        state = grow_cluster(codes, seed, remaining, tau, rho, psi, cluster_id=len(iterations))
        if state is None:
            break
        labels[state.members] = state.id
        iterations.append(state.iterations_used)
        gammas.append(state.gamma_history)
        seeds.append(seed)
        remaining = remaining[labels[remaining] == NOISE]
        if remaining.shape[0] > 0:
            remaining_map = remove_members(remaining_map, codes[state.members])
        logger.debug(
            "cluster %d: seed=%d size=%d rounds=%d",
            state.id, seed, state.members.shape[0], state.iterations_used,
        )

    if not iterations and np.all(codes == codes[0]):
        # every point falls in the same cells: one cluster, even if tau is too high to grow it
        labels[:] = 0
        iterations, gammas, seeds = [0], [[]], [0]

    _settle_noise(codes, labels, psi, tau)
    k = len(iterations)
    return ClusteringResult(
        labels=labels,
        k=k,
        per_cluster_iterations=iterations,
        gamma_history=gammas,
        objective=objective(codes, labels, psi),
        seeds=seeds,
        tau=tau,
        rho=rho,
    )


def cluster(data, params: PskcParams, model: PartitioningModel | None = None):
    """Build the kernel, embed every point once and cluster.

    Returns ``(result, model, codes)`` so that callers can post-process or
    inspect similarities without re-embedding.
    """
    X = as_dataset(data, min_points=2)
    t0 = time.perf_counter()
    if model is None:
        model = build_model(X, params.kernel)
    t1 = time.perf_counter()
    codes = embed_many(model, X)
    t2 = time.perf_counter()
    result = cluster_codes(codes, model.psi, params.tau, params.rho)
    t3 = time.perf_counter()
    result.timings = Timings(model_build_s=t1 - t0, embed_s=t2 - t1, cluster_s=t3 - t2)
    return result, model, codes


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

def post_process(
    result: ClusteringResult,
    codes: np.ndarray,
    psi: int,
    maps: list[MeanMap] | None = None,
    fraction: float = 0.1,
) -> ClusteringResult:
    """One reassignment pass that can only raise the objective.

    In every cluster the ``fraction`` of members least similar to it are
    compared against all clusters (maps frozen at the start of the pass) and
    moved to the one they are strictly most similar to.  The new labelling is
    kept only if its objective is strictly larger; otherwise ``result`` is
    returned with ``reassigned = 0``.  Noise is never touched.
    """
    start = time.perf_counter()
    codes = np.asarray(codes)
    labels = result.labels.copy()
    moved = 0
    if result.k >= 2:
        if maps is None:
            maps = cluster_maps(codes, result.labels, psi)
        candidates = []
        for j, mm in enumerate(maps):
            members = np.flatnonzero(result.labels == j)
            if members.size == 0:
                continue
            own = similarities(codes, mm, members)
            m = int(math.ceil(fraction * members.size))
            candidates.append(members[np.argsort(own, kind="stable")[:m]])
        cand = np.concatenate(candidates)
        sims = np.stack([similarities(codes, mm, cand) for mm in maps], axis=1)
        rows = np.arange(cand.size)
        best = np.argmax(sims, axis=1)
        better = sims[rows, best] > sims[rows, result.labels[cand]]
        labels[cand[better]] = best[better]
        moved = int(np.count_nonzero(better))

    new = replace(result, reassigned=0)
    if moved:
        labels = _compact(labels)
        gamma_after = objective(codes, labels, psi)
        if gamma_after > result.objective:
            new = replace(result, labels=labels, k=int(labels.max()) + 1, objective=gamma_after, reassigned=moved)
            if new.k != result.k:
                logger.info("post-processing emptied %d cluster(s)", result.k - new.k)
    new.timings = replace(result.timings, post_s=time.perf_counter() - start)
    return new


def _compact(labels: np.ndarray) -> np.ndarray:
    """Renumber cluster ids to ``0..k-1`` in order of first id, keeping noise."""
    used = np.unique(labels[labels >= 0])
    if used.size == 0 or used[-1] == used.size - 1:
        return labels
    remap = np.full(int(used[-1]) + 1, NOISE, dtype=np.int64)
    remap[used] = np.arange(used.size)
    out = labels.copy()
    out[labels >= 0] = remap[labels[labels >= 0]]
    return out


# ---------------------------------------------------------------------------
# Estimator
# ---------------------------------------------------------------------------

class PSKC:
    """Clustering estimator with a scikit-learn style interface.

    Example::

        model = PSKC(psi=128, tau=2e-3, rho=0.26).fit(X)
        model.labels_

    Attributes set by :meth:`fit`:
        kernel_: The Isolation Kernel partitioning model.
        codes_: (n, t) feature codes of the training points.
        raw_result_: Result before post-processing.
        result_: Final result (post-processed when ``post_process=True``).
        labels_: ``result_.labels``.
    """

    def __init__(self, psi=16, tau=0.1, rho=0.1, t=100, random_state=42, post_process=True):
        self.params = PskcParams(tau=tau, rho=rho, kernel=KernelParams(psi=psi, t=t, rng_seed=random_state))
        self.post_process = post_process

    def fit(self, X):
        raw, model, codes = cluster(X, self.params)
        self.kernel_ = model
        self.codes_ = codes
        self.raw_result_ = raw
        self.result_ = post_process(raw, codes, model.psi) if self.post_process else raw
        self.labels_ = self.result_.labels
        return self

    def fit_predict(self, X):
        return self.fit(X).labels_

    def similarity_profile(self, X=None):
        """Similarity distribution over the fitted clusters (training points by default)."""
        codes = self.codes_ if X is None else embed_many(self.kernel_, X)
        maps = cluster_maps(self.codes_, self.labels_, self.kernel_.psi)
        return similarity_profile(codes, maps)
