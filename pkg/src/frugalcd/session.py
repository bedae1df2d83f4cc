"""Labeling-session state machine, simulated runs, and result tables.

A session owns one pool. Iteration t = 0 shows the cluster medoids;
every submit trains a fresh classifier on all labels so far, records
metrics, and computes the next display with the session's strategy.
States are immutable: submit_labels returns a successor instead of
mutating, so a service can keep the previous state until the new one is
fully built (single-writer, crash-consistent).

Seeding discipline: every stochastic component draws from a seed derived
from (master seed, component tag, iteration) and never from the strategy
name. All strategies therefore see the same clustering, the same initial
display and the same classifier training shuffle, which makes
first-iteration metrics identical across strategies by construction.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .baselines import (Strategy, maxmin_select, random_select,
                        uncertainty_select)
from .clustering import (ClusterModel, assignment_matrix, kmeans_fit,
                         squared_distance_matrix)
from .display import Membership, select_top_b, solve
from .errors import InvalidArgument, InvalidState
from .svm import (LinearModel, decision_scores, evaluate_eer,
                  normalize_scores, scoring_matrix, train_svm)
from .types import Dataset, Hyperparams, LabelVector, require_valid

ABLATION_ROWS = ("rep", "div", "amb", "rep+div", "rep+amb", "div+amb", "all")


def derive_seed(seed: int, *tags) -> int:
    """Stable child seed for one component; independent of strategy."""
    text = ":".join(str(t) for t in tags)
    digest = hashlib.sha256(f"{seed}|{text}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class IterationRecord:
    """Metrics written when iteration `iteration` is submitted.

    fp_iterations and objective_final describe the solver run that
    produced the next display (proposed strategy only, absent on the
    final iteration); eer is absent when the session has no eval split.
    """

    iteration: int
    n_labeled: int
    sampling_rate_pct: float
    eer: float | None
    fp_iterations: int | None
    objective_final: float | None
    strategy: str


MetricsTrace = tuple[IterationRecord, ...]


@dataclass(frozen=True)
class SimulatedOracle:
    """Answers label queries from a fully known ground truth."""

    truth: LabelVector

    def answer(self, indices: Sequence[int]) -> dict[int, int]:
        out = {}
        for i in indices:
            v = int(self.truth.values[i])
            if v == 0:
                raise InvalidState(f"ground truth has no label for row {i}")
            out[i] = v
        return out


@dataclass(frozen=True)
class SessionState:
    """Immutable snapshot of a labeling session."""

    dataset: Dataset
    hp: Hyperparams
    strategy: Strategy
    oracle_kind: str
    clusters: ClusterModel
    indicator: np.ndarray
    distances: np.ndarray
    rep_masked: bool
    t: int
    history: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    model: LinearModel | None
    pending: tuple[int, ...]
    last_membership: Membership | None
    metrics: MetricsTrace
    eval_features: np.ndarray | None
    eval_labels: np.ndarray | None

    @property
    def finished(self) -> bool:
        return len(self.pending) == 0

    @property
    def n_labeled(self) -> int:
        return sum(len(ids) for ids, _ in self.history)

    def labeled_mask(self) -> np.ndarray:
        mask = np.zeros(self.dataset.n, dtype=bool)
        for ids, _ in self.history:
            mask[list(ids)] = True
        return mask

    def labeled_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """(row indices, labels) over everything labeled so far."""
        rows = [i for ids, _ in self.history for i in ids]
        labs = [v for _, vals in self.history for v in vals]
        return (np.asarray(rows, dtype=np.intp),
                np.asarray(labs, dtype=np.int8))


def _initial_display(model: ClusterModel, dataset: Dataset, b: int
                     ) -> tuple[int, ...]:
    """Medoids in cluster order, then runner-ups round-robin by rank.

    With more clusters than slots this truncates to the first b medoids;
    with fewer it pads with each cluster's next-nearest members until b
    samples are listed (or the pool runs out).
    """
    dist = squared_distance_matrix(model, dataset)
    per_cluster = []
    for c in range(model.n_clusters):
        members = np.flatnonzero(model.assignment == c)
        if members.size:
            order = members[np.argsort(dist[members, c], kind="stable")]
            per_cluster.append([int(i) for i in order])
    picks: list[int] = []
    rank = 0
    while len(picks) < b:
        progressed = False
        for lst in per_cluster:
            if rank < len(lst):
                picks.append(lst[rank])
                progressed = True
                if len(picks) == b:
                    break
        if not progressed:
            break
        rank += 1
    return tuple(picks)


def init_session(dataset: Dataset, hp: Hyperparams, strategy: Strategy,
                 oracle_kind: str = "human",
                 eval_features=None, eval_labels=None,
                 mask_representativity: bool = False) -> SessionState:
    """Cluster the pool and surface the initial medoid display.

    mask_representativity zeroes the distance matrix fed to the display
    objective while keeping the real cluster structure, which turns the
    representativity term off without touching diversity.
    """
    require_valid(dataset)
    hp.check_pool_size(dataset.n)
    strategy = Strategy(strategy)

    clusters = kmeans_fit(dataset, hp.n_clusters,
                          seed=derive_seed(hp.seed, "kmeans"))
    C = assignment_matrix(clusters)
    D = squared_distance_matrix(clusters, dataset)
    if mask_representativity:
        D = np.zeros_like(D)

    eval_X = None
    eval_y = None
    if eval_features is not None:
        eval_X = np.asarray(eval_features, dtype=np.float64)
        eval_y = np.asarray(eval_labels)
        if eval_X.ndim != 2 or eval_y.shape != (eval_X.shape[0],):
            raise InvalidArgument("eval features and labels must align")

    return SessionState(
        dataset=dataset, hp=hp, strategy=strategy, oracle_kind=oracle_kind,
        clusters=clusters, indicator=C, distances=D,
        rep_masked=mask_representativity,
        t=0, history=(), model=None,
        pending=_initial_display(clusters, dataset, hp.display_size),
        last_membership=None, metrics=(),
        eval_features=eval_X, eval_labels=eval_y)


def _next_display(state: SessionState, model: LinearModel,
                  labeled: np.ndarray
                  ) -> tuple[tuple[int, ...], Membership | None, dict]:
    """Pick the next display for the freshly trained model.

    Returns (pending, membership, extras) where extras carries solver
    diagnostics for the metrics record.
    """
    hp = state.hp
    b = hp.display_size
    unlabeled = np.flatnonzero(~labeled)
    if unlabeled.size == 0:
        return (), None, {}

    if state.strategy is Strategy.PROPOSED:
        raw = decision_scores(model, state.dataset)
        F = scoring_matrix(normalize_scores(raw, hp.score_clamp))
        seed = derive_seed(hp.seed, "solve", state.t)
        if hp.solve_unlabeled_only:
            rows = unlabeled
            membership, report = solve(state.indicator[rows],
                                       state.distances[rows], F[rows],
                                       hp, seed=seed)
            local = select_top_b(membership.mu,
                                 np.zeros(rows.size, dtype=bool), b)
            pending = tuple(int(i) for i in rows[local])
        else:
            membership, report = solve(state.indicator, state.distances, F,
                                       hp, seed=seed)
            pending = tuple(int(i) for i in
                            select_top_b(membership.mu, labeled, b))
        extras = {"fp_iterations": membership.tau,
                  "objective_final": float(report.objective_trace[-1])}
        return pending, membership, extras

    if state.strategy is Strategy.MAXMIN:
        rows = np.flatnonzero(labeled)
        picks = maxmin_select(state.dataset.features, rows, b)
    elif state.strategy is Strategy.UNCERTAINTY:
        raw = decision_scores(model, state.dataset)
        picks = uncertainty_select(raw, labeled, b)
    else:
        picks = random_select(labeled, b,
                              seed=derive_seed(hp.seed, "random", state.t))
    return tuple(int(i) for i in picks), None, {}


def submit_labels(state: SessionState, answers: Mapping[int, int]
                  ) -> SessionState:
    """Fold one round of answers into the session.

    answers must cover exactly the pending display (keys are pool row
    indices, values +1 or -1). Trains the classifier on every label so
    far, appends the iteration record and computes the next display.
    """
    if state.finished:
        raise InvalidState("session is finished; no display is pending")

    pending = set(state.pending)
    keys = set(int(k) for k in answers)
    missing = sorted(pending - keys)
    extra = sorted(keys - pending)
    if missing:
        raise InvalidArgument(f"answers missing for rows {missing}")
    if extra:
        raise InvalidArgument(f"answers for rows {extra} not in the display")
    values = {int(k): int(v) for k, v in answers.items()}
    bad = sorted(k for k, v in values.items() if v not in (-1, 1))
    if bad:
        raise InvalidArgument(f"labels for rows {bad} must be +1 or -1")

    round_ids = tuple(state.pending)
    round_labels = tuple(values[i] for i in round_ids)
    history = state.history + ((round_ids, round_labels),)

    rows = [i for ids, _ in history for i in ids]
    labs = [v for _, vals in history for v in vals]
    model = train_svm(state.dataset.features[np.asarray(rows, dtype=np.intp)],
                      np.asarray(labs), reg=state.hp.svm_reg,
                      epochs=state.hp.svm_epochs,
                      seed=derive_seed(state.hp.seed, "svm", state.t))

    eer = None
    if state.eval_features is not None:
        eer = evaluate_eer(model, state.eval_features, state.eval_labels)

    labeled = np.zeros(state.dataset.n, dtype=bool)
    labeled[rows] = True

    t_next = state.t + 1
    if t_next >= state.hp.n_rounds or labeled.all():
        pending_next: tuple[int, ...] = ()
        membership = None
        extras: dict = {}
    else:
        pending_next, membership, extras = _next_display(state, model,
                                                         labeled)

    n_labeled = len(rows)
    record = IterationRecord(
        iteration=t_next,
        n_labeled=n_labeled,
        sampling_rate_pct=100.0 * n_labeled / state.dataset.n,
        eer=eer,
        fp_iterations=extras.get("fp_iterations"),
        objective_final=extras.get("objective_final"),
        strategy=state.strategy.value)

    return replace(state, t=t_next, history=history, model=model,
                   pending=pending_next, last_membership=membership,
                   metrics=state.metrics + (record,))


def sampling_rate(t: int, b: int, n: int) -> float:
    """Percentage of the pool labeled after t full displays of size b."""
    if t < 0 or b < 1 or n < 1:
        raise InvalidArgument("need t >= 0, b >= 1, n >= 1")
    return 100.0 * t * b / n


def truncated_pct_string(numer: int, denom: int) -> str:
    """100 * numer / denom truncated (not rounded) to two decimals.

    Integer arithmetic, so values like 2.90909... print as "2.90" with
    no float dust deciding the last digit.
    """
    if denom < 1 or numer < 0:
        raise InvalidArgument("need numer >= 0 and denom >= 1")
    hundredths = (10000 * numer) // denom
    return f"{hundredths // 100}.{hundredths % 100:02d}"


def stratified_split(labels: LabelVector, fraction: float = 0.5,
                     seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, eval) row indices preserving each class rate.

    Requires fully labeled input. Per-class counts round half to even;
    classes with at least two members always land on both sides.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidArgument("fraction must lie in (0, 1)")
    vals = labels.values
    if (vals == 0).any():
        raise InvalidArgument("split requires fully labeled ground truth")
    rng = np.random.default_rng(seed)
    train: list[int] = []
    evalset: list[int] = []
    for cls in (1, -1):
        rows = np.flatnonzero(vals == cls)
        if rows.size == 0:
            continue
        rows = rng.permutation(rows)
        k = int(round(fraction * rows.size))
        if rows.size >= 2:
            k = min(max(k, 1), rows.size - 1)
        train.extend(int(i) for i in rows[:k])
        evalset.extend(int(i) for i in rows[k:])
    return (np.asarray(sorted(train), dtype=np.intp),
            np.asarray(sorted(evalset), dtype=np.intp))


def run_simulated(dataset: Dataset, ground_truth: LabelVector,
                  hp: Hyperparams, strategy: Strategy,
                  eval_split: tuple[np.ndarray, np.ndarray] | None = None,
                  mask_representativity: bool = False,
                  seed: int | None = None) -> MetricsTrace:
    """Run a whole session against a known ground truth.

    The pool is the train half of the split (a stratified half/half one
    is derived from the master seed when none is given); the other half
    is used only to score each iteration's classifier.
    """
    if seed is not None:
        hp = hp.with_seed(seed)
    if len(ground_truth) != dataset.n:
        raise InvalidArgument(f"{len(ground_truth)} labels for "
                              f"{dataset.n} samples")
    if not ground_truth.labeled_mask.all():
        raise InvalidArgument("simulation requires fully labeled ground "
                              "truth")

    if eval_split is None:
        eval_split = stratified_split(ground_truth, 0.5,
                                      seed=derive_seed(hp.seed, "split"))
    train_idx, eval_idx = eval_split
    train_idx = np.asarray(train_idx, dtype=np.intp)
    eval_idx = np.asarray(eval_idx, dtype=np.intp)
    if np.intersect1d(train_idx, eval_idx).size:
        raise InvalidArgument("train and eval splits overlap")

    eval_y = ground_truth.values[eval_idx]
    if not (eval_y == 1).any() or not (eval_y == -1).any():
        raise InvalidArgument("eval split must contain both classes")

    pool = dataset.select(train_idx)
    oracle = SimulatedOracle(ground_truth.select(train_idx))
    state = init_session(pool, hp, strategy, oracle_kind="simulated",
                         eval_features=dataset.features[eval_idx],
                         eval_labels=eval_y,
                         mask_representativity=mask_representativity)
    while not state.finished:
        state = submit_labels(state, oracle.answer(state.pending))
    return state.metrics


def run_fully_supervised(dataset: Dataset, ground_truth: LabelVector,
                         hp: Hyperparams,
                         eval_split: tuple[np.ndarray, np.ndarray] | None
                         = None) -> float:
    """EER of a classifier trained on every train-half label at once."""
    if not ground_truth.labeled_mask.all():
        raise InvalidArgument("requires fully labeled ground truth")
    if eval_split is None:
        eval_split = stratified_split(ground_truth, 0.5,
                                      seed=derive_seed(hp.seed, "split"))
    train_idx, eval_idx = eval_split
    model = train_svm(dataset.features[train_idx],
                      ground_truth.values[train_idx],
                      reg=hp.svm_reg, epochs=hp.svm_epochs,
                      seed=derive_seed(hp.seed, "svm-full"))
    return evaluate_eer(model, dataset.features[eval_idx],
                        ground_truth.values[eval_idx])


def run_ablation(dataset: Dataset, ground_truth: LabelVector,
                 hp: Hyperparams,
                 eval_split: tuple[np.ndarray, np.ndarray] | None = None
                 ) -> dict[str, MetricsTrace]:
    """One simulated run per term combination of the display objective.

    Row names follow ABLATION_ROWS. "rep" runs with alpha = beta = 0;
    rows without "rep" zero the distance matrix instead, so diversity
    still sees the real clusters. "all" is the untouched configuration.
    """
    out: dict[str, MetricsTrace] = {}
    for name in ABLATION_ROWS:
        use_rep = "rep" in name or name == "all"
        use_div = "div" in name or name == "all"
        use_amb = "amb" in name or name == "all"
        hp_c = replace(hp,
                       alpha=hp.alpha if use_div else 0.0,
                       beta=hp.beta if use_amb else 0.0)
        out[name] = run_simulated(dataset, ground_truth, hp_c,
                                  Strategy.PROPOSED, eval_split=eval_split,
                                  mask_representativity=not use_rep)
    return out


def format_eer_grid(rows: Mapping[str, Sequence[MetricsTrace]],
                    n_pool: int) -> str:
    """Fixed-width table: iteration header, truncated Samp%% row, then
    one mean-EER%% row per entry of `rows` (insertion order).

    Every trace must share the same labeling schedule; EER cells average
    across a row's traces.
    """
    traces = [t for ts in rows.values() for t in ts]
    if not traces:
        raise InvalidArgument("no traces to format")
    schedule = [(r.iteration, r.n_labeled) for r in traces[0]]
    for t in traces[1:]:
        if [(r.iteration, r.n_labeled) for r in t] != schedule:
            raise InvalidArgument("traces disagree on the labeling schedule")

    label_w = max(max(len(k) for k in rows), len("Samp%"))
    cell_w = 7
    header = "Iter".ljust(label_w) + " |" + "".join(
        str(it).rjust(cell_w) for it, _ in schedule)
    samp = "Samp%".ljust(label_w) + " |" + "".join(
        truncated_pct_string(nl, n_pool).rjust(cell_w)
        for _, nl in schedule)
    rule = "-" * len(header)
    lines = [header, samp, rule]
    for name, ts in rows.items():
        cells = []
        for j in range(len(schedule)):
            vals = [t[j].eer for t in ts if t[j].eer is not None]
            if vals:
                cells.append(f"{100.0 * sum(vals) / len(vals):.2f}"
                             .rjust(cell_w))
            else:
                cells.append("-".rjust(cell_w))
        lines.append(name.ljust(label_w) + " |" + "".join(cells))
    return "\n".join(lines) + "\n"


def format_ablation_grid(results: Mapping[str, MetricsTrace],
                         n_pool: int) -> str:
    """Ablation table with one row per term combination."""
    rows = {name: [results[name]] for name in ABLATION_ROWS
            if name in results}
    if len(rows) != len(results):
        unknown = sorted(set(results) - set(ABLATION_ROWS))
        raise InvalidArgument(f"unknown ablation rows {unknown}")
    return format_eer_grid(rows, n_pool)


def write_metrics_csv(records: Sequence[IterationRecord], path,
                      seed: int) -> None:
    """CSV rows (iter, samp_pct, eer, strategy, seed), floats via repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "samp_pct", "eer", "strategy", "seed"])
        for r in records:
            writer.writerow([
                r.iteration,
                repr(float(r.sampling_rate_pct)),
                "" if r.eer is None else repr(float(r.eer)),
                r.strategy,
                seed,
            ])
