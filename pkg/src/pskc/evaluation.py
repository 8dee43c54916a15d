"""Clustering quality metrics, stability trials and benchmark harnesses."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .data import LabeledDataset, generate_gaussian_mixture
from .engine import NOISE, ClusteringResult, PskcParams, cluster, post_process
from .exceptions import InvalidInputError, InvalidParameterError


def f1_score(pred, truth, noise_as_cluster: bool = False) -> float:
    """Class-weighted best-match F1 of a predicted labelling.

    For every true class ``c`` the predicted cluster with the highest F1
    against ``c`` is found; the score is the average of those maxima
    weighted by class size.  Points whose truth is ``-1`` are unlabeled and
    ignored.  Predicted noise (``-1``) is never a match candidate unless
    ``noise_as_cluster`` is set, but noise points still count in each
    class's size, so labelling points as noise lowers recall.
    """
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise InvalidInputError(f"pred has {pred.shape[0]} labels, truth has {truth.shape[0]}")
    keep = truth != NOISE
    pred, truth = pred[keep], truth[keep]
    if truth.size == 0:
        raise InvalidInputError("truth has no labeled points")

    classes, t_idx = np.unique(truth, return_inverse=True)
    clusters, p_idx = np.unique(pred, return_inverse=True)
    table = np.zeros((classes.size, clusters.size), dtype=np.int64)
    np.add.at(table, (t_idx, p_idx), 1)
    class_size = table.sum(axis=1)
    cluster_size = table.sum(axis=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = table / cluster_size[None, :]
        recall = table / class_size[:, None]
        f = np.where(table > 0, 2 * precision * recall / (precision + recall), 0.0)
    if not noise_as_cluster:
        f[:, clusters == NOISE] = 0.0
    best = f.max(axis=1) if f.shape[1] else np.zeros(classes.size)
    return float(np.sum(class_size * best) / truth.size)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    """Summary of one clustering run."""

    f1: float | None = None
    k_found: int = 0
    noise_fraction: float = 0.0
    runtime_split: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    objective_before: float = 0.0
    objective_after: float = 0.0
    reassigned_count: int = 0
    post_share: float = 0.0

    def as_text(self) -> str:
        build, embed, clus, post = self.runtime_split
        lines = [
            f"k = {self.k_found}",
            f"noise fraction = {self.noise_fraction:.4f}",
            f"objective before/after post-processing = {self.objective_before:.6f} / {self.objective_after:.6f}",
            f"points reassigned = {self.reassigned_count}",
            f"runtime (s): build {build:.3f}, embed {embed:.3f}, cluster {clus:.3f}, post {post:.3f}",
        ]
        if self.f1 is not None:
            lines.insert(0, f"F1 = {self.f1:.4f}")
        return "\n".join(lines)


def post_process_report(before: ClusteringResult, after: ClusteringResult) -> EvalReport:
    """Objective before and after post-processing, points moved and the time share spent."""
    if before.labels.shape != after.labels.shape:
        raise InvalidInputError("results describe different datasets")
    moved = int(np.count_nonzero(before.labels != after.labels))
    timings = after.timings
    total = timings.total_s
    return EvalReport(
        k_found=after.k,
        noise_fraction=after.noise_count / after.n,
        runtime_split=(timings.model_build_s, timings.embed_s, timings.cluster_s, timings.post_s),
        objective_before=before.objective,
        objective_after=after.objective,
        reassigned_count=moved,
        post_share=timings.post_s / total if total > 0 else 0.0,
    )


def evaluate(dataset: LabeledDataset, params: PskcParams, apply_post=True):
    """Cluster ``dataset`` and report quality against its truth.

    Returns ``(report, before, after)``.
    """
    before, model, codes = cluster(dataset.data, params)
    after = post_process(before, codes, model.psi) if apply_post else before
    report = post_process_report(before, after)
    if dataset.truth is not None:
        report.f1 = f1_score(after.labels, dataset.truth)
    return report, before, after


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------

@dataclass
class StabilitySummary:
    scores: list[float]
    seeds: list[int]

    @property
    def min(self) -> float:
        return min(self.scores)

    @property
    def median(self) -> float:
        return statistics.median(self.scores)

    @property
    def max(self) -> float:
        return max(self.scores)

    @property
    def iqr(self) -> float:
        q1, q3 = np.percentile(self.scores, [25, 75])
        return float(q3 - q1)


def stability_trial(dataset: LabeledDataset, params: PskcParams, trials: int = 10, apply_post=True) -> StabilitySummary:
    """F1 over ``trials`` runs whose kernel seeds are ``base_seed + i``.

    Only the Isolation Kernel sample changes between trials; psi, t, tau and
    rho stay fixed.
    """
    if dataset.truth is None:
        raise InvalidInputError("stability trials need ground truth")
    if trials < 2:
        raise InvalidParameterError(f"trials must be >= 2, got {trials}")
    base = params.kernel.rng_seed
    scores, seeds = [], []
    for i in range(trials):
        trial_params = replace(params, kernel=replace(params.kernel, rng_seed=base + i))
        report, _, _ = evaluate(dataset, trial_params, apply_post=apply_post)
        scores.append(report.f1)
        seeds.append(base + i)
    return StabilitySummary(scores, seeds)


# ---------------------------------------------------------------------------
# Scale-up benchmark
# ---------------------------------------------------------------------------

@dataclass
class ScaleRow:
    n: int
    model_build_s: float
    embed_s: float
    cluster_s: float
    post_s: float
    k_found: int
    cluster_ratio: float = 1.0
    total_ratio: float = 1.0

    @property
    def total_s(self) -> float:
        return self.model_build_s + self.embed_s + self.cluster_s + self.post_s


@dataclass
class ScaleTable:
    rows: list[ScaleRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = ["n,model_build_s,embed_s,cluster_s,post_s,total_s,k_found,cluster_ratio,total_ratio"]
        for r in self.rows:
            out.append(
                f"{r.n},{r.model_build_s:.6f},{r.embed_s:.6f},{r.cluster_s:.6f},{r.post_s:.6f},"
                f"{r.total_s:.6f},{r.k_found},{r.cluster_ratio:.4f},{r.total_ratio:.4f}"
            )
        return "\n".join(out) + "\n"

    def as_text(self) -> str:
        head = f"{'n':>9} {'build':>8} {'embed':>8} {'cluster':>8} {'post':>8} {'k':>3} {'ratio':>7} {'linear':>7}"
        base = self.rows[0].n if self.rows else 1
        lines = [head]
        for r in self.rows:
            lines.append(
                f"{r.n:>9} {r.model_build_s:8.3f} {r.embed_s:8.3f} {r.cluster_s:8.3f} "
                f"{r.post_s:8.3f} {r.k_found:>3} {r.cluster_ratio:7.2f} {r.n / base:7.2f}"
            )
        return "\n".join(lines)


def scaleup_bench(sizes, params: PskcParams, k: int = 4, spread: float = 0.1, repeats: int = 3, seed: int = 0) -> ScaleTable:
    """Time clustering of ``k``-blob mixtures of increasing size.

    Every size is run ``repeats`` times and the median of each phase is
    reported.  The cluster phase excludes kernel construction and embedding.
    Ratios are relative to the first (smallest) size.
    """
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise InvalidParameterError("sizes must not be empty")
    if sizes != sorted(sizes):
        raise InvalidParameterError("sizes must be ascending")
    table = ScaleTable()
    for n in sizes:
        ds = generate_gaussian_mixture(k=k, n_per_cluster=max(1, n // k), spread=spread, seed=seed)
        runs = []
        for _ in range(repeats):
            before, model, codes = cluster(ds.data, params)
            after = post_process(before, codes, model.psi)
            runs.append(after)
        tm = [r.timings for r in runs]
        table.rows.append(
            ScaleRow(
                n=ds.n,
                model_build_s=statistics.median(x.model_build_s for x in tm),
                embed_s=statistics.median(x.embed_s for x in tm),
                cluster_s=statistics.median(x.cluster_s for x in tm),
                post_s=statistics.median(x.post_s for x in tm),
                k_found=runs[0].k,
            )
        )
    base = table.rows[0]
    for r in table.rows:
        r.cluster_ratio = r.cluster_s / base.cluster_s if base.cluster_s > 0 else float("nan")
        r.total_ratio = r.total_s / base.total_s if base.total_s > 0 else float("nan")
    return table
