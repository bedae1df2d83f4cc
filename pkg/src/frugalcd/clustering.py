"""Seeded Lloyd clustering and the selection matrices derived from it.

This is deliberately a from-scratch implementation: the empty-cluster
policy, tie-breaking and per-iteration distortion trace are all pinned
by tests, and library k-means implementations leave those unspecified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .types import Dataset


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centroids with the assignment that produced them.

    distortion_trace holds the total squared distance after each Lloyd
    iteration (post centroid update); it is non-increasing.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    distortion: float
    distortion_trace: tuple[float, ...]

    @property
    def n_clusters(self) -> int:
        return int(self.centroids.shape[0])


def _features(dataset) -> np.ndarray:
    X = dataset.features if isinstance(dataset, Dataset) else dataset
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidArgument("features must be a non-empty 2-D array")
    if not np.all(np.isfinite(X)):
        raise InvalidArgument("features contain non-finite entries")
    return X


def _distances_to(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared distances via per-centroid explicit differences.

    The difference form guarantees exact zeros for coincident points and
    non-negative output, unlike the expanded dot-product formula, and it
    never materializes an (n, k, d) array.
    """
    n, k = X.shape[0], centroids.shape[0]
    out = np.empty((n, k))
    for c in range(k):
        diff = X - centroids[c]
        out[:, c] = np.einsum("ij,ij->i", diff, diff)
    return out


def _plus_plus_seeds(X: np.ndarray, k: int, rng) -> np.ndarray:
    """k-means++ seeding: the classic D^2-weighted sequential draw."""
    n = X.shape[0]
    seeds = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    seeds[0] = X[first]
    d2 = ((X - seeds[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # All remaining points coincide with a chosen seed; any
            # choice is equivalent, keep the draw deterministic.
            nxt = int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        seeds[j] = X[nxt]
        d2 = np.minimum(d2, ((X - seeds[j]) ** 2).sum(axis=1))
    return seeds


def kmeans_fit(dataset, n_clusters: int, seed: int,
               max_iter: int = 100) -> ClusterModel:
    """Lloyd iterations from a k-means++ start, deterministic per seed.

    A cluster that loses all members is re-seeded with the point farthest
    from that cluster's stale centroid; the re-seeded centroid has no
    members this iteration, so the recorded distortion is unaffected and
    the trace stays non-increasing.
    """
    X = _features(dataset)
    n = X.shape[0]
    if not 1 <= n_clusters <= n:
        raise InvalidArgument(
            f"n_clusters must lie in [1, {n}], got {n_clusters}")
    if max_iter < 1:
        raise InvalidArgument("max_iter must be >= 1")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_seeds(X, n_clusters, rng)
    assignment = np.full(n, -1, dtype=np.intp)
    trace: list[float] = []

    for _ in range(max_iter):
        dist = _distances_to(X, centroids)
        new_assignment = dist.argmin(axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(n_clusters):
            members = assignment == c
            if members.any():
                centroids[c] = X[members].mean(axis=0)
            else:
                farthest = int(dist[:, c].argmax())
                centroids[c] = X[farthest]
        dist = _distances_to(X, centroids)
        trace.append(float(dist[np.arange(n), assignment].sum()))

    return ClusterModel(centroids=centroids,
                        assignment=assignment.astype(np.intp),
                        distortion=trace[-1],
                        distortion_trace=tuple(trace))


def assignment_matrix(model: ClusterModel) -> np.ndarray:
    """One-hot (n, k) indicator of the fitted assignment."""
    n = model.assignment.shape[0]
    C = np.zeros((n, model.n_clusters))
    C[np.arange(n), model.assignment] = 1.0
    return C


def squared_distance_matrix(model: ClusterModel, dataset) -> np.ndarray:
    """(n, k) squared euclidean distances of samples to the centroids."""
    X = _features(dataset)
    if X.shape[1] != model.centroids.shape[1]:
        raise InvalidArgument(
            f"features have dimension {X.shape[1]}, centroids "
            f"{model.centroids.shape[1]}")
    return _distances_to(X, model.centroids)


def medoid_indices(model: ClusterModel, dataset) -> np.ndarray:
    """Per-cluster sample index closest to the centroid.

    Clusters are visited in ascending label order; ties break to the
    smallest sample index; empty clusters (which kmeans_fit itself never
    produces) are skipped.
    """
    X = _features(dataset)
    dist = _distances_to(X, model.centroids)
    out = []
    for c in range(model.n_clusters):
        members = np.flatnonzero(model.assignment == c)
        if members.size == 0:
            continue
        out.append(int(members[dist[members, c].argmin()]))
    return np.asarray(out, dtype=np.intp)
