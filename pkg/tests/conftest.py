"""Shared fixtures and instance factories for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from frugalcd import Dataset, Hyperparams


def random_instance(rng, n=None, k=None, alpha=None, beta=None, gamma=None,
                    stable_only=True):
    """One random display-objective instance (C, D, F, hp).

    Every cluster is guaranteed at least one member. With stable_only,
    weights are rejection-sampled inside (0, 2] until alpha <= 0.95 *
    gamma, which keeps the fixed-point iteration strictly contractive
    (its per-sweep contraction factor is alpha / gamma).
    """
    n = int(rng.integers(3, 7)) if n is None else n
    k = int(rng.integers(1, 4)) if k is None else k
    assert k <= n
    assign = rng.integers(0, k, n)
    assign[:k] = np.arange(k)
    C = np.zeros((n, k))
    C[np.arange(n), assign] = 1.0
    D = rng.random((n, k)) * 3.0
    f = np.clip(rng.random(n), 1e-3, 1.0 - 1e-3)
    F = np.stack([f, 1.0 - f], axis=1)
    while True:
        a = rng.random() * 2.0 if alpha is None else alpha
        b = rng.random() * 2.0 if beta is None else beta
        g = rng.random() * 2.0 if gamma is None else gamma
        if a <= 0 or b <= 0 or g < 0.05:
            continue
        if not stable_only or a <= 0.95 * g:
            break
    hp = Hyperparams(alpha=a, beta=b, gamma=g, fp_max_iter=2000)
    return C, D, F, hp


def tiny_dataset(rng, n=12, d=3) -> Dataset:
    feats = rng.standard_normal((n, d))
    return Dataset(feats, tuple(f"x{i:03d}" for i in range(n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
