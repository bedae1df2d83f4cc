"""Display selection as entropy-regularized optimization on the simplex.

The display distribution mu lives on the probability simplex over the
pool. The objective trades off four terms:

* representativity: expected squared distance to the assigned centroid,
* diversity: negative entropy of the cluster masses induced by mu,
* ambiguity: expected (negated) entropy of the classifier score rows,
* spread: negative entropy of mu itself, which keeps the optimum in the
  interior and makes the minimizer unique.

With C the one-hot cluster indicator, D the squared-distance matrix and
F the two-column score matrix, the objective is

    mu . rep  +  alpha * sum_k m_k log m_k  +  beta * mu . amb
              +  gamma * sum_i mu_i log mu_i,      m = C' mu

where rep_i = D[i, cluster(i)] and amb_i = sum_c F[i,c] log F[i,c], with
0 log 0 = 0. The first-order condition gives a closed-form multiplicative
update: exponentiate the (negated, gamma-scaled) marginal cost of each
sample at the previous masses and renormalize. Each sweep contracts the
centered log cluster-mass error by exactly alpha/gamma, so the iteration
converges for alpha < gamma and oscillates with period 2 otherwise; see
solve() for how that is surfaced.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidState, NumericFailure
from .types import Hyperparams

# How far a vector may drift from the simplex before validation rejects it.
SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class Membership:
    """Solved selection distribution plus convergence diagnostics."""

    mu: np.ndarray
    tau: int
    converged: bool
    final_l1_delta: float


@dataclass(frozen=True)
class SolverReport:
    """Per-iteration traces; index 0 describes the starting point."""

    objective_trace: np.ndarray
    l1_delta_trace: np.ndarray  # nan at index 0 (no predecessor)


def _as_float64(name: str, a) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    return out


def _check_inputs(mu, C, D, F):
    n, k = C.shape
    if mu.shape != (n,):
        raise InvalidArgument(f"mu has shape {mu.shape}, expected ({n},)")
    if D.shape != (n, k):
        raise InvalidArgument(f"D has shape {D.shape}, expected {(n, k)}")
    if F.ndim != 2 or F.shape[0] != n:
        raise InvalidArgument(f"F has shape {F.shape}, expected ({n}, *)")


def _check_simplex(mu: np.ndarray) -> None:
    if mu.min(initial=0.0) < -SIMPLEX_TOL:
        raise InvalidArgument("mu has a negative entry")
    if abs(float(mu.sum()) - 1.0) > SIMPLEX_TOL:
        raise InvalidArgument("mu does not sum to 1")


def _xlogx(v: np.ndarray) -> np.ndarray:
    """v * log(v) with the 0 * log(0) = 0 convention."""
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


def _score_entropy_rows(F: np.ndarray) -> np.ndarray:
    """Per-sample sum_c F[i,c] log F[i,c]; requires entries in (0, 1)."""
    if F.min() <= 0.0 or F.max() >= 1.0:
        raise InvalidArgument("score matrix entries must lie strictly in (0, 1)")
    return (F * np.log(F)).sum(axis=1)


def normalized_exp(v: np.ndarray) -> np.ndarray:
    """exp(v) scaled to sum to 1.

    The maximum is subtracted before exponentiation; the shift cancels in
    the normalization, so the result is exactly invariant to adding any
    constant to v, and the intermediate exponentials cannot overflow.
    """
    w = np.exp(v - v.max())
    return w / w.sum()


def objective(mu, C, D, F, hp: Hyperparams, *, validate: bool = True) -> float:
    """Value of the weighted four-term selection objective at mu.

    With validate=True (the default) mu must lie on the simplex up to
    SIMPLEX_TOL. Passing validate=False skips that check, which callers
    need when probing points a finite-difference step off the simplex.
    """
    mu = _as_float64("mu", mu)
    C = _as_float64("C", C)
    D = _as_float64("D", D)
    F = _as_float64("F", F)
    _check_inputs(mu, C, D, F)
    if validate:
        _check_simplex(mu)
    mu = np.maximum(mu, 0.0)

    rep = float(mu @ (C * D).sum(axis=1))
    div = float(_xlogx(C.T @ mu).sum())
    amb = float(mu @ _score_entropy_rows(F))
    card = float(_xlogx(mu).sum())
    return rep + hp.alpha * div + hp.beta * amb + hp.gamma * card


def objective_gradient(mu, C, D, F, hp: Hyperparams) -> np.ndarray:
    """Gradient of `objective` at an interior point (all entries > 0)."""
    mu = _as_float64("mu", mu)
    C = _as_float64("C", C)
    D = _as_float64("D", D)
    F = _as_float64("F", F)
    _check_inputs(mu, C, D, F)
    if mu.min() <= 0.0:
        raise InvalidArgument("gradient requires an interior point (mu > 0)")

    masses = C.T @ mu
    # Empty clusters contribute nothing: their C column is zero, so the
    # log is only evaluated where it is finite.
    log_mass = np.zeros_like(masses)
    np.log(masses, out=log_mass, where=masses > 0)
    rep = (C * D).sum(axis=1)
    div = C @ (log_mass + 1.0)
    amb = _score_entropy_rows(F)
    return rep + hp.alpha * div + hp.beta * amb + hp.gamma * (np.log(mu) + 1.0)


def fixed_point_update(mu_prev, C, D, F, hp: Hyperparams) -> np.ndarray:
    """One multiplicative sweep of the first-order-condition update.

    Evaluates the marginal cost of every sample at the cluster masses
    induced by mu_prev, then renormalizes exp(-cost / gamma). The output
    is strictly positive and sums to 1 exactly up to rounding.
    """
    mu_prev = _as_float64("mu_prev", mu_prev)
    C = _as_float64("C", C)
    D = _as_float64("D", D)
    F = _as_float64("F", F)
    _check_inputs(mu_prev, C, D, F)
    _check_simplex(mu_prev)

    masses = np.maximum(C.T @ mu_prev, hp.mass_floor)
    cost = ((C * D).sum(axis=1)
            + hp.alpha * (C @ (np.log(masses) + 1.0))
            + hp.beta * _score_entropy_rows(F))
    if not np.all(np.isfinite(cost)):
        bad = int(np.flatnonzero(~np.isfinite(cost))[0])
        raise NumericFailure(f"non-finite selection cost at sample {bad}")
    return normalized_exp(-cost / hp.gamma)


def solve(C, D, F, hp: Hyperparams, seed: int | None = None
          ) -> tuple[Membership, SolverReport]:
    """Iterate fixed_point_update from a random interior start.

    Stops when the l1 change between sweeps falls below hp.fp_tol or
    after hp.fp_max_iter sweeps, whichever comes first; converged=False
    in the latter case (callers inspect it, nothing is raised, because a
    period-2 orbit still yields a usable distribution). The report traces
    have length tau + 1, aligned so entry j describes mu after sweep j.
    """
    C = _as_float64("C", C)
    D = _as_float64("D", D)
    F = _as_float64("F", F)
    n = C.shape[0]
    if n < 1:
        raise InvalidArgument("empty pool")
    rng = np.random.default_rng(hp.seed if seed is None else seed)
    mu = rng.random(n) + 1e-3
    mu = mu / mu.sum()

    obj = [objective(mu, C, D, F, hp, validate=False)]
    deltas = [np.nan]
    converged = False
    delta = np.inf
    for _ in range(hp.fp_max_iter):
        nxt = fixed_point_update(mu, C, D, F, hp)
        delta = float(np.abs(nxt - mu).sum())
        mu = nxt
        obj.append(objective(mu, C, D, F, hp, validate=False))
        deltas.append(delta)
        if delta < hp.fp_tol:
            converged = True
            break

    membership = Membership(mu=mu, tau=len(deltas) - 1, converged=converged,
                            final_l1_delta=delta)
    report = SolverReport(objective_trace=np.asarray(obj),
                          l1_delta_trace=np.asarray(deltas))
    return membership, report


def select_top_b(mu, labeled_mask, b: int) -> np.ndarray:
    """Indices of the b largest-mass unlabeled samples.

    Sorting is stable on descending mass, so equal masses resolve to the
    smaller index. Fewer than b unlabeled samples yields all of them.
    """
    if b < 1:
        raise InvalidArgument("b must be >= 1")
    mu = _as_float64("mu", mu)
    labeled = np.asarray(labeled_mask, dtype=bool)
    if labeled.shape != mu.shape:
        raise InvalidArgument("labeled_mask must align with mu")
    candidates = np.flatnonzero(~labeled)
    if candidates.size == 0:
        raise InvalidState("every sample is already labeled")
    order = np.argsort(-mu[candidates], kind="stable")
    return candidates[order[:min(b, candidates.size)]]


def export_solver_report(report: SolverReport, path) -> None:
    """Write the solver traces as CSV (sweep, objective, l1_delta)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sweep", "objective", "l1_delta"])
        for j, (o, dl) in enumerate(zip(report.objective_trace,
                                        report.l1_delta_trace)):
            writer.writerow([j, repr(float(o)),
                             "" if np.isnan(dl) else repr(float(dl))])
