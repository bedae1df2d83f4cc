"""Lloyd clustering: determinism, distortion, matrices, medoids."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import tiny_dataset
from frugalcd import (InvalidArgument, assignment_matrix, kmeans_fit,
                      medoid_indices, squared_distance_matrix)


def blobs(rng, centers, per, spread=0.3):
    pts = [c + spread * rng.standard_normal((per, len(c)))
           for c in np.asarray(centers, dtype=float)]
    return np.concatenate(pts)


class TestKmeansFit:
    def test_deterministic_per_seed(self, rng):
        X = rng.standard_normal((40, 4))
        a = kmeans_fit(X, 5, seed=7)
        b = kmeans_fit(X, 5, seed=7)
        assert np.array_equal(a.assignment, b.assignment)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.distortion_trace == b.distortion_trace

    def test_distortion_trace_non_increasing(self, rng):
        for trial in range(10):
            X = rng.standard_normal((30, 3))
            model = kmeans_fit(X, int(rng.integers(1, 8)), seed=trial)
            trace = np.asarray(model.distortion_trace)
            assert trace.size >= 1
            assert np.all(np.diff(trace) <= 1e-9)
            assert model.distortion == trace[-1]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.integers(1, 6))
    def test_distortion_property(self, seed, n, k):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, 2))
        model = kmeans_fit(X, min(k, n), seed=seed)
        trace = np.asarray(model.distortion_trace)
        assert np.all(np.diff(trace) <= 1e-9)
        # every sample sits in the cluster of its nearest centroid
        dist = oracles.brute_squared_distances(X, model.centroids)
        np.testing.assert_array_equal(model.assignment, dist.argmin(axis=1))

    def test_recovers_separated_blobs(self, rng):
        X = blobs(rng, [[0, 0], [10, 0], [0, 10]], per=10)
        model = kmeans_fit(X, 3, seed=0)
        groups = [frozenset(np.flatnonzero(model.assignment == c))
                  for c in range(3)]
        expected = [frozenset(range(0, 10)), frozenset(range(10, 20)),
                    frozenset(range(20, 30))]
        assert sorted(groups, key=min) == expected

    def test_k_equals_one_gives_global_mean(self, rng):
        X = rng.standard_normal((15, 3))
        model = kmeans_fit(X, 1, seed=0)
        np.testing.assert_allclose(model.centroids[0], X.mean(axis=0),
                                   atol=1e-12)
        assert (model.assignment == 0).all()

    def test_k_equals_n_zero_distortion(self, rng):
        X = rng.standard_normal((6, 2))
        model = kmeans_fit(X, 6, seed=0)
        assert sorted(model.assignment.tolist()) == list(range(6))
        assert model.distortion == 0.0

    def test_duplicate_points_exercise_reseed(self):
        """More clusters than distinct points: the run must terminate,
        keep the trace monotone and reach zero distortion."""
        X = np.array([[0.0, 0.0]] * 5 + [[9.0, 9.0]] * 5)
        model = kmeans_fit(X, 3, seed=2)
        trace = np.asarray(model.distortion_trace)
        assert np.all(np.diff(trace) <= 1e-9)
        assert model.distortion == 0.0
        # both occupied positions are represented
        occupied = {tuple(model.centroids[c]) for c in
                    set(model.assignment.tolist())}
        assert occupied == {(0.0, 0.0), (9.0, 9.0)}

    def test_validation(self, rng):
        X = rng.standard_normal((5, 2))
        with pytest.raises(InvalidArgument):
            kmeans_fit(X, 6, seed=0)
        with pytest.raises(InvalidArgument):
            kmeans_fit(X, 0, seed=0)
        bad = X.copy()
        bad[1, 1] = np.nan
        with pytest.raises(InvalidArgument):
            kmeans_fit(bad, 2, seed=0)

    def test_accepts_dataset_objects(self, rng):
        ds = tiny_dataset(rng, n=20, d=3)
        model = kmeans_fit(ds, 4, seed=1)
        assert model.assignment.shape == (20,)


class TestMatrices:
    def test_assignment_matrix_one_hot(self, rng):
        X = rng.standard_normal((25, 3))
        model = kmeans_fit(X, 4, seed=3)
        C = assignment_matrix(model)
        assert C.shape == (25, 4)
        np.testing.assert_array_equal(C.sum(axis=1), np.ones(25))
        np.testing.assert_array_equal(C.argmax(axis=1), model.assignment)

    def test_distances_match_reference(self, rng):
        X = rng.standard_normal((18, 4))
        model = kmeans_fit(X, 3, seed=4)
        D = squared_distance_matrix(model, X)
        ref = oracles.brute_squared_distances(X, model.centroids)
        np.testing.assert_allclose(D, ref, rtol=1e-12, atol=1e-12)
        assert D.min() >= 0.0

    def test_exact_zero_for_coincident_point(self, rng):
        # with k == n each point is its own centroid: exact zeros
        X = rng.standard_normal((5, 3))
        model = kmeans_fit(X, 5, seed=5)
        D = squared_distance_matrix(model, X)
        assert (D[np.arange(5), model.assignment] == 0.0).all()

    def test_dimension_mismatch(self, rng):
        X = rng.standard_normal((10, 3))
        model = kmeans_fit(X, 2, seed=6)
        with pytest.raises(InvalidArgument):
            squared_distance_matrix(model, rng.standard_normal((4, 5)))


class TestMedoids:
    def test_matches_reference(self, rng):
        for trial in range(8):
            X = rng.standard_normal((22, 3))
            model = kmeans_fit(X, int(rng.integers(2, 7)), seed=trial)
            got = medoid_indices(model, X).tolist()
            ref = oracles.brute_medoids(X, model.assignment, model.centroids)
            assert got == ref

    def test_medoids_are_members(self, rng):
        X = rng.standard_normal((30, 2))
        model = kmeans_fit(X, 5, seed=9)
        for c, m in enumerate(medoid_indices(model, X)):
            assert model.assignment[m] == c

    def test_tie_breaks_to_smaller_index(self):
        # two points equidistant from their centroid
        X = np.array([[0.0], [2.0], [10.0]])
        model = kmeans_fit(X, 2, seed=0)
        # the {0, 2} cluster has centroid 1.0, both members 1.0 away
        meds = medoid_indices(model, X)
        two_cluster = int(model.assignment[0])
        assert model.assignment[1] == two_cluster
        assert meds[two_cluster] == 0
