"""Reference query strategies the display optimizer is compared against."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import InvalidArgument, InvalidState


class Strategy(str, Enum):
    """Selection strategies a session can run."""

    PROPOSED = "proposed"
    MAXMIN = "maxmin"
    UNCERTAINTY = "uncertainty"
    RANDOM = "random"


def maxmin_select(features, labeled_idx, b: int) -> np.ndarray:
    """Greedy farthest-first: b picks maximizing the distance to the
    nearest already-labeled or already-picked sample.

    Euclidean distance; ties break to the smallest index. Raises if the
    labeled set is empty (seed the session with medoids first).
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgument("features must be a 2-D array")
    labeled = np.asarray(labeled_idx, dtype=np.intp)
    if labeled.size == 0:
        raise InvalidState("maxmin needs a non-empty labeled set; "
                           "seed the session with medoids first")
    if b < 1:
        raise InvalidArgument("b must be >= 1")

    n = X.shape[0]
    taken = np.zeros(n, dtype=bool)
    taken[labeled] = True
    # Squared distances preserve the argmax and every tie.
    min_d = np.full(n, np.inf)
    for j in labeled:
        diff = X - X[j]
        min_d = np.minimum(min_d, np.einsum("ij,ij->i", diff, diff))

    picks = []
    for _ in range(b):
        if taken.all():
            break
        scores = np.where(taken, -np.inf, min_d)
        pick = int(scores.argmax())
        picks.append(pick)
        taken[pick] = True
        diff = X - X[pick]
        min_d = np.minimum(min_d, np.einsum("ij,ij->i", diff, diff))
    return np.asarray(picks, dtype=np.intp)


def uncertainty_select(raw_scores, labeled_mask, b: int) -> np.ndarray:
    """b unlabeled samples with margins closest to zero.

    Stable sort on |margin|, so ties resolve to the smaller index.
    """
    scores = np.asarray(raw_scores, dtype=np.float64)
    labeled = np.asarray(labeled_mask, dtype=bool)
    if scores.shape != labeled.shape:
        raise InvalidArgument("scores and labeled_mask must align")
    if b < 1:
        raise InvalidArgument("b must be >= 1")
    candidates = np.flatnonzero(~labeled)
    if candidates.size == 0:
        raise InvalidState("every sample is already labeled")
    order = np.argsort(np.abs(scores[candidates]), kind="stable")
    return candidates[order[:min(b, candidates.size)]]


def random_select(labeled_mask, b: int, seed: int) -> np.ndarray:
    """b unlabeled samples drawn uniformly without replacement."""
    labeled = np.asarray(labeled_mask, dtype=bool)
    if b < 1:
        raise InvalidArgument("b must be >= 1")
    candidates = np.flatnonzero(~labeled)
    if candidates.size == 0:
        raise InvalidState("every sample is already labeled")
    rng = np.random.default_rng(seed)
    k = min(b, candidates.size)
    return np.asarray(rng.choice(candidates, size=k, replace=False),
                      dtype=np.intp)
