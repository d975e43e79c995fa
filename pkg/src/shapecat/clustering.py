"""K-means (Lloyd iteration) with seeded multi-restart selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .descriptors import as_matrix
from .errors import DimensionMismatch, EmptyInput, KTooLarge
from .metrics import POSITIVE, ScoreReport, align_clusters, score

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    inertia: float


@dataclass
class ClusteringRun:
    model: ClusterModel
    assignments: np.ndarray
    seed: int
    iterations: int
    converged: bool
    # inertia after each assignment step, against the centroids in use at that step
    inertia_trace: list[float] = field(default_factory=list)


def _assign(x, centroids):
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)  # first minimum wins ties
    return labels, d2[np.arange(x.shape[0]), labels]


def _forgy(x, k, rng):
    _, first = np.unique(x, axis=0, return_index=True)
    candidates = np.sort(first)
    if k > candidates.size:
        raise KTooLarge(f"k={k} exceeds the {candidates.size} distinct points")
    return x[candidates[rng.choice(candidates.size, size=k, replace=False)]].copy()


def kmeans_fit(data, k: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER,
               tol: float = DEFAULT_TOL, init: np.ndarray | None = None) -> ClusteringRun:
    """Cluster ``data`` (features x samples matrix or FeatureVectors) into ``k`` groups.

    Initial centroids are ``k`` distinct data points drawn with
    ``default_rng(seed)`` unless ``init`` is given.  Iteration stops once
    no centroid moves farther than ``tol`` or after ``max_iter`` rounds.
    A cluster left empty is re-seeded at the point farthest from its
    assigned centroid.
    """
    x = as_matrix(data)
    if x.size == 0:
        raise EmptyInput("no data to cluster")
    if k < 1:
        raise ValueError("k must be at least 1")
    if max_iter < 1 or tol < 0:
        raise ValueError("max_iter must be >= 1 and tol >= 0")
    if init is None:
        centroids = _forgy(x, k, np.random.default_rng(seed))
    else:
        centroids = np.array(init, dtype=np.float64)
        if centroids.shape != (k, x.shape[1]):
            raise DimensionMismatch(f"init shape {centroids.shape} != ({k}, {x.shape[1]})")

    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        labels, d2 = _assign(x, centroids)
        trace.append(float(d2.sum()))
        new = centroids.copy()
        taken = set()
        for j in range(k):
            members = labels == j
            if members.any():
                new[j] = x[members].mean(axis=0)
            else:
                order = np.argsort(-d2, kind="stable")
                far = next(i for i in order if i not in taken)
                taken.add(far)
                new[j] = x[far]
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift <= tol:
            converged = True
            break

    labels, d2 = _assign(x, centroids)
    model = ClusterModel(k, centroids, float(d2.sum()))
    return ClusteringRun(model, labels, seed, it, converged, trace)


def kmeans_best_of(data, truth, k: int = 2, n_init: int = 10, base_seed: int = 0,
                   positive=POSITIVE, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL):
    """Run ``n_init`` seeded restarts and keep the one scoring the highest f1.

    Seeds are ``base_seed .. base_seed + n_init - 1``; ties go to the lower
    seed.  Returns ``(best_run, report)``.
    """
    if n_init < 1:
        raise ValueError("n_init must be at least 1")
    x = as_matrix(data)
    if len(truth) != x.shape[0]:
        raise DimensionMismatch(f"{len(truth)} labels for {x.shape[0]} samples")
    best = None
    for seed in range(base_seed, base_seed + n_init):
        run = kmeans_fit(x, k, seed, max_iter, tol)
        _, counts = align_clusters(run.assignments.tolist(), truth, positive)
        report = score(counts)
        if best is None or report.f1 > best[1].f1:
            best = (run, report)
    return best


def score_run(run: ClusteringRun, truth, positive=POSITIVE) -> ScoreReport:
    _, counts = align_clusters(run.assignments.tolist(), truth, positive)
    return score(counts)
