"""Session protocol: displays, label rounds, metrics, simulated runs."""

import csv

import numpy as np
import pytest

from frugalcd import (ABLATION_ROWS, Dataset, Hyperparams, InvalidArgument,
                      InvalidState, IterationRecord, LabelVector,
                      SimulatedOracle, Strategy, SyntheticSpec, derive_seed,
                      format_ablation_grid, format_eer_grid,
                      generate_synthetic, init_session, kmeans_fit,
                      medoid_indices, run_ablation, run_fully_supervised,
                      run_simulated, sampling_rate, stratified_split,
                      submit_labels, truncated_pct_string, write_metrics_csv)


def small_pool(n=60, d=4, rate=0.25, seed=3):
    return generate_synthetic(SyntheticSpec(n=n, d=d, positive_rate=rate,
                                            n_modes=4, separation=5.0,
                                            noise=0.8, seed=seed))


def small_hp(**kw):
    base = dict(n_clusters=4, display_size=8, n_rounds=3, svm_epochs=40)
    base.update(kw)
    return Hyperparams(**base)


class TestDeriveSeed:
    def test_deterministic_and_tag_sensitive(self):
        assert derive_seed(0, "kmeans") == derive_seed(0, "kmeans")
        assert derive_seed(0, "kmeans") != derive_seed(1, "kmeans")
        assert derive_seed(0, "kmeans") != derive_seed(0, "split")
        assert derive_seed(7, "svm", 3) != derive_seed(7, "svm", 4)

    def test_pinned_values(self):
        # pinned so a refactor cannot silently reshuffle every seeded
        # component at once
        assert derive_seed(0, "kmeans") == 11813967989468323301
        assert derive_seed(7, "svm", 3) == 14942085028698004763


class TestInitialDisplay:
    def test_display_is_medoids_when_slots_match_clusters(self):
        ds, _ = small_pool()
        hp = small_hp(n_clusters=4, display_size=4)
        state = init_session(ds, hp, Strategy.PROPOSED)
        clusters = kmeans_fit(ds, 4, seed=derive_seed(hp.seed, "kmeans"))
        assert sorted(state.pending) == sorted(
            int(i) for i in medoid_indices(clusters, ds))

    def test_fewer_clusters_than_slots_pads_with_runner_ups(self):
        # two clusters {0, 1} and {2, 3, 4}; medoids 0 (0.25 tie to the
        # smaller index) and 3 (exactly on the centroid)
        X = np.array([[0.0], [1.0], [10.0], [11.0], [12.0]],
                     dtype=np.float32)
        ds = Dataset(features=X, ids=tuple("abcde"))
        hp = Hyperparams(n_clusters=2, display_size=4, n_rounds=2)
        state = init_session(ds, hp, Strategy.PROPOSED)
        assert set(state.pending[:2]) == {0, 3}
        assert set(state.pending[2:]) == {1, 2}

    def test_more_clusters_than_slots_truncates(self):
        ds, _ = small_pool()
        hp = small_hp(n_clusters=6, display_size=2)
        state = init_session(ds, hp, Strategy.PROPOSED)
        clusters = kmeans_fit(ds, 6, seed=derive_seed(hp.seed, "kmeans"))
        medoids = [int(i) for i in medoid_indices(clusters, ds)]
        assert list(state.pending) == medoids[:2]

    def test_initial_state_shape(self):
        ds, _ = small_pool()
        state = init_session(ds, small_hp(), Strategy.RANDOM)
        assert state.t == 0
        assert state.model is None
        assert state.history == ()
        assert state.metrics == ()
        assert not state.finished
        assert state.n_labeled == 0


class TestSubmitFlow:
    def test_round_advances_state(self):
        ds, truth = small_pool()
        state = init_session(ds, small_hp(), Strategy.PROPOSED)
        oracle = SimulatedOracle(truth)
        nxt = submit_labels(state, oracle.answer(state.pending))
        assert nxt.t == 1
        assert nxt.n_labeled == len(state.pending)
        assert nxt.model is not None
        assert len(nxt.metrics) == 1
        rec = nxt.metrics[0]
        assert rec.iteration == 1
        assert rec.strategy == "proposed"
        assert rec.eer is None  # no eval split attached
        assert rec.sampling_rate_pct == pytest.approx(
            100.0 * nxt.n_labeled / ds.n)
        # next display avoids everything labeled
        assert not set(nxt.pending) & set(state.pending)

    def test_budget_exhaustion_finishes_session(self):
        ds, truth = small_pool()
        state = init_session(ds, small_hp(n_rounds=3), Strategy.RANDOM)
        oracle = SimulatedOracle(truth)
        for _ in range(3):
            assert not state.finished
            state = submit_labels(state, oracle.answer(state.pending))
        assert state.finished
        assert state.t == 3
        assert len(state.metrics) == 3

    def test_pool_exhaustion_finishes_early(self):
        ds, truth = small_pool(n=20)
        hp = Hyperparams(n_clusters=4, display_size=16, n_rounds=10,
                         svm_epochs=30)
        state = init_session(ds, hp, Strategy.PROPOSED)
        oracle = SimulatedOracle(truth)
        state = submit_labels(state, oracle.answer(state.pending))
        assert state.metrics[0].sampling_rate_pct == pytest.approx(80.0)
        assert len(state.pending) == 4  # only 4 rows left
        state = submit_labels(state, oracle.answer(state.pending))
        assert state.finished
        assert state.metrics[1].sampling_rate_pct == pytest.approx(100.0)

    def test_displays_never_repeat_rows(self):
        ds, truth = small_pool(n=80)
        state = init_session(ds, small_hp(n_rounds=5), Strategy.PROPOSED)
        oracle = SimulatedOracle(truth)
        seen: set[int] = set()
        while not state.finished:
            assert not seen & set(state.pending)
            seen.update(state.pending)
            state = submit_labels(state, oracle.answer(state.pending))
        assert state.n_labeled == len(seen)

    def test_submit_errors(self):
        ds, truth = small_pool()
        state = init_session(ds, small_hp(), Strategy.RANDOM)
        answers = SimulatedOracle(truth).answer(state.pending)

        short = dict(answers)
        short.pop(state.pending[0])
        with pytest.raises(InvalidArgument, match="missing"):
            submit_labels(state, short)

        extra = dict(answers)
        stranger = next(i for i in range(ds.n) if i not in state.pending)
        extra[stranger] = 1
        with pytest.raises(InvalidArgument, match="not in the display"):
            submit_labels(state, extra)

        bad = dict(answers)
        bad[state.pending[0]] = 3
        with pytest.raises(InvalidArgument, match=r"\+1 or -1"):
            submit_labels(state, bad)

    def test_submit_on_finished_session(self):
        ds, truth = small_pool()
        state = init_session(ds, small_hp(n_rounds=1), Strategy.RANDOM)
        state = submit_labels(state, SimulatedOracle(truth)
                              .answer(state.pending))
        assert state.finished
        with pytest.raises(InvalidState, match="finished"):
            submit_labels(state, {})

    def test_oracle_refuses_unknown_truth(self):
        truth = LabelVector(np.array([1, 0, -1], dtype=np.int8))
        with pytest.raises(InvalidState, match="row 1"):
            SimulatedOracle(truth).answer([0, 1])


@pytest.fixture(scope="module")
def pool():
    return generate_synthetic(SyntheticSpec(
        n=160, d=6, positive_rate=0.15, n_modes=5, separation=5.0,
        noise=0.8, seed=11))


class TestSimulatedRuns:
    def test_first_iteration_eer_identical_across_strategies(self, pool):
        """Before any model exists every strategy shows the same medoid
        display, so the first trained classifier and its error must be
        bit-identical."""
        ds, truth = pool
        hp = small_hp(n_rounds=2)
        eers = {}
        for strat in Strategy:
            trace = run_simulated(ds, truth, hp, strat)
            eers[strat.value] = trace[0].eer
        vals = list(eers.values())
        assert all(v == vals[0] for v in vals), eers

    def test_rerun_is_bit_identical(self, pool):
        ds, truth = pool
        hp = small_hp()
        a = run_simulated(ds, truth, hp, Strategy.PROPOSED)
        b = run_simulated(ds, truth, hp, Strategy.PROPOSED)
        assert a == b  # frozen records compare field by field

    def test_seed_override_changes_trace(self, pool):
        ds, truth = pool
        hp = small_hp()
        a = run_simulated(ds, truth, hp, Strategy.PROPOSED)
        b = run_simulated(ds, truth, hp, Strategy.PROPOSED, seed=99)
        assert a != b

    def test_solver_diagnostics_only_on_proposed_rows(self, pool):
        ds, truth = pool
        hp = small_hp(n_rounds=3)
        proposed = run_simulated(ds, truth, hp, Strategy.PROPOSED)
        random = run_simulated(ds, truth, hp, Strategy.RANDOM)
        # a solve happens after every submit except the last one
        assert all(r.fp_iterations is not None
                   and r.objective_final is not None
                   for r in proposed[:-1])
        assert proposed[-1].fp_iterations is None
        assert all(r.fp_iterations is None for r in random)

    def test_eer_recorded_every_iteration(self, pool):
        ds, truth = pool
        trace = run_simulated(ds, truth, small_hp(), Strategy.UNCERTAINTY)
        assert len(trace) == 3
        assert all(r.eer is not None and 0.0 <= r.eer <= 1.0 for r in trace)
        assert [r.iteration for r in trace] == [1, 2, 3]

    def test_unlabeled_only_solve_completes(self, pool):
        ds, truth = pool
        hp = small_hp(solve_unlabeled_only=True)
        trace = run_simulated(ds, truth, hp, Strategy.PROPOSED)
        assert len(trace) == 3

    def test_requires_full_ground_truth(self, pool):
        ds, _ = pool
        holes = np.zeros(ds.n, dtype=np.int8)
        holes[0] = 1
        with pytest.raises(InvalidArgument, match="fully labeled"):
            run_simulated(ds, LabelVector(holes), small_hp(),
                          Strategy.RANDOM)

    def test_overlapping_split_rejected(self, pool):
        ds, truth = pool
        idx = np.arange(ds.n // 2)
        with pytest.raises(InvalidArgument, match="overlap"):
            run_simulated(ds, truth, small_hp(), Strategy.RANDOM,
                          eval_split=(idx, idx))

    def test_fully_supervised_reference(self, pool):
        ds, truth = pool
        eer = run_fully_supervised(ds, truth, small_hp())
        assert 0.0 <= eer <= 0.5  # separable modes: should beat chance


class TestStratifiedSplit:
    def test_protocol_pool_sizes(self):
        """2200 samples with 39 positives: banker's rounding puts 20
        positives and 1080 negatives in train, 1100 rows each side."""
        values = np.full(2200, -1, dtype=np.int8)
        values[:39] = 1
        train, ev = stratified_split(LabelVector(values), 0.5, seed=0)
        assert train.size == 1100 and ev.size == 1100
        assert (values[train] == 1).sum() == 20
        assert (values[ev] == 1).sum() == 19

    def test_partition_properties(self):
        rng = np.random.default_rng(5)
        values = rng.choice(np.array([-1, 1], dtype=np.int8), size=301)
        labels = LabelVector(values)
        train, ev = stratified_split(labels, 0.3, seed=2)
        assert np.intersect1d(train, ev).size == 0
        assert np.union1d(train, ev).size == 301
        assert np.all(np.diff(train) > 0) and np.all(np.diff(ev) > 0)

    def test_tiny_class_lands_on_both_sides(self):
        values = np.full(50, -1, dtype=np.int8)
        values[:2] = 1
        train, ev = stratified_split(LabelVector(values), 0.5, seed=0)
        assert (values[train] == 1).sum() == 1
        assert (values[ev] == 1).sum() == 1

    def test_deterministic_per_seed(self):
        values = np.array([1, -1] * 40, dtype=np.int8)
        labels = LabelVector(values)
        a = stratified_split(labels, 0.5, seed=9)
        b = stratified_split(labels, 0.5, seed=9)
        c = stratified_split(labels, 0.5, seed=10)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        assert not np.array_equal(a[0], c[0])

    def test_rejects_unknowns_and_bad_fraction(self):
        with pytest.raises(InvalidArgument):
            stratified_split(LabelVector(np.array([1, 0, -1],
                                                  dtype=np.int8)))
        ok = LabelVector(np.array([1, -1, 1, -1], dtype=np.int8))
        with pytest.raises(InvalidArgument):
            stratified_split(ok, 0.0)
        with pytest.raises(InvalidArgument):
            stratified_split(ok, 1.0)


class TestRates:
    def test_sampling_rate(self):
        assert sampling_rate(1, 16, 1100) == pytest.approx(1600 / 1100)
        assert sampling_rate(0, 16, 1100) == 0.0
        with pytest.raises(InvalidArgument):
            sampling_rate(-1, 16, 1100)

    def test_truncated_schedule_for_protocol_pool(self):
        """16 labels per round over an 1100-sample pool; two decimals,
        truncated. 10 rounds cover 160 / 1100 = 14.5454...%."""
        expected = ["1.45", "2.90", "4.36", "5.81", "7.27", "8.72",
                    "10.18", "11.63", "13.09", "14.54"]
        got = [truncated_pct_string(16 * t, 1100) for t in range(1, 11)]
        assert got == expected

    def test_truncation_not_rounding(self):
        assert truncated_pct_string(1, 3) == "33.33"
        assert truncated_pct_string(2, 3) == "66.66"  # not 66.67
        assert truncated_pct_string(1, 1) == "100.00"
        assert truncated_pct_string(0, 5) == "0.00"
        with pytest.raises(InvalidArgument):
            truncated_pct_string(1, 0)


def fake_trace(eers, b=16, strategy="proposed"):
    return tuple(
        IterationRecord(iteration=t + 1, n_labeled=b * (t + 1),
                        sampling_rate_pct=100.0 * b * (t + 1) / 1100,
                        eer=e, fp_iterations=None, objective_final=None,
                        strategy=strategy)
        for t, e in enumerate(eers))


class TestGrids:
    def test_grid_layout(self):
        rows = {
            "proposed": [fake_trace([0.10, 0.05]), fake_trace([0.20, 0.15])],
            "random": [fake_trace([0.30, 0.25], strategy="random")],
        }
        text = format_eer_grid(rows, 1100)
        lines = text.splitlines()
        assert lines[0].startswith("Iter")
        assert lines[0].split("|")[1].split() == ["1", "2"]
        assert lines[1].split("|")[1].split() == ["1.45", "2.90"]
        assert set(lines[2]) == {"-"}
        assert lines[3].split("|")[1].split() == ["15.00", "10.00"]
        assert lines[4].split("|")[1].split() == ["30.00", "25.00"]

    def test_grid_rejects_mismatched_schedules(self):
        rows = {"a": [fake_trace([0.1, 0.2])],
                "b": [fake_trace([0.1, 0.2, 0.3])]}
        with pytest.raises(InvalidArgument, match="schedule"):
            format_eer_grid(rows, 1100)

    def test_grid_requires_traces(self):
        with pytest.raises(InvalidArgument):
            format_eer_grid({}, 1100)

    def test_missing_eer_renders_dash(self):
        text = format_eer_grid({"x": [fake_trace([0.1, None])]}, 1100)
        assert text.splitlines()[3].split("|")[1].split() == ["10.00", "-"]

    def test_ablation_grid_names(self):
        results = {name: fake_trace([0.1]) for name in ABLATION_ROWS}
        text = format_ablation_grid(results, 1100)
        for name in ABLATION_ROWS:
            assert any(line.startswith(name) for line in text.splitlines())
        with pytest.raises(InvalidArgument, match="unknown"):
            format_ablation_grid({"bogus": fake_trace([0.1])}, 1100)


class TestAblation:
    def test_seven_rows_on_small_pool(self):
        ds, truth = generate_synthetic(SyntheticSpec(
            n=120, d=5, positive_rate=0.2, n_modes=4, separation=5.0,
            noise=0.8, seed=6))
        hp = Hyperparams(n_clusters=4, display_size=8, n_rounds=2,
                         svm_epochs=30)
        results = run_ablation(ds, truth, hp)
        assert tuple(results) == ABLATION_ROWS
        assert all(len(trace) == 2 for trace in results.values())
        # every configuration still runs the full display pipeline
        assert all(trace[0].fp_iterations is not None
                   for trace in results.values())
        text = format_ablation_grid(results, 60)
        assert len(text.splitlines()) == 3 + len(ABLATION_ROWS)


class TestMetricsCsv:
    def test_round_trip(self, tmp_path):
        trace = fake_trace([0.125, None])
        path = tmp_path / "m.csv"
        write_metrics_csv(trace, path, seed=7)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iter", "samp_pct", "eer", "strategy", "seed"]
        assert rows[1][0] == "1"
        assert float(rows[1][1]) == trace[0].sampling_rate_pct
        assert float(rows[1][2]) == 0.125
        assert rows[2][2] == ""  # eer absent
        assert rows[1][3] == "proposed" and rows[1][4] == "7"
