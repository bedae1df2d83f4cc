"""Core value types: datasets, label vectors, hyper-parameters, validation.

Features are stored as float32 (matching the on-disk format exactly);
all numerics downstream promote to float64 before doing arithmetic.
Labels use an explicit three-state encoding so "unlabeled" is a first
class value rather than a NaN or an out-of-band integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument

POSITIVE = 1
NEGATIVE = -1
UNKNOWN = 0

_LABEL_DOMAIN = (POSITIVE, NEGATIVE, UNKNOWN)

# Violation categories reported by validate_dataset.
DIMENSION_MISMATCH = "dimension-mismatch"
NON_FINITE = "non-finite"
DUPLICATE_ID = "duplicate-id"
LABEL_LENGTH_MISMATCH = "label-length-mismatch"
LABEL_DOMAIN = "label-domain"


@dataclass(frozen=True)
class Dataset:
    """Immutable pool of samples.

    Attributes:
        features: (n, d) float32 array, one row per sample.
        ids: n unique string identifiers, aligned with feature rows.
        patch_refs: optional per-sample (ref_path, test_path) image pairs.
    """

    features: np.ndarray
    ids: tuple[str, ...]
    patch_refs: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float32)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "ids", tuple(str(s) for s in self.ids))
        if self.patch_refs is not None:
            refs = tuple((str(a), str(b)) for a, b in self.patch_refs)
            object.__setattr__(self, "patch_refs", refs)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        if self.features.ndim != 2:
            raise InvalidArgument("features must be a 2-D array")
        return int(self.features.shape[1])

    def select(self, indices) -> "Dataset":
        """Row subset as a new Dataset, preserving order of `indices`."""
        idx = np.asarray(indices, dtype=np.intp)
        ids = tuple(self.ids[i] for i in idx)
        refs = None
        if self.patch_refs is not None:
            refs = tuple(self.patch_refs[i] for i in idx)
        return Dataset(self.features[idx], ids, refs)

    def index_of(self, sample_id: str) -> int:
        try:
            return self.ids.index(sample_id)
        except ValueError:
            raise InvalidArgument(f"unknown sample id {sample_id!r}") from None


@dataclass(frozen=True)
class LabelVector:
    """Per-sample labels with an explicit unknown state.

    values is an int8 array over {POSITIVE, NEGATIVE, UNKNOWN}; any other
    entry raises at construction so a LabelVector is valid by existence.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.int8)
        if vals.ndim != 1:
            raise InvalidArgument("labels must be a 1-D vector")
        if not np.isin(vals, _LABEL_DOMAIN).all():
            bad = vals[~np.isin(vals, _LABEL_DOMAIN)][0]
            raise InvalidArgument(f"label value {int(bad)} outside {{+1, -1, 0}}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.values != UNKNOWN

    @property
    def n_positive(self) -> int:
        return int((self.values == POSITIVE).sum())

    @property
    def n_negative(self) -> int:
        return int((self.values == NEGATIVE).sum())

    def select(self, indices) -> "LabelVector":
        return LabelVector(self.values[np.asarray(indices, dtype=np.intp)])

    @staticmethod
    def all_unknown(n: int) -> "LabelVector":
        return LabelVector(np.zeros(n, dtype=np.int8))


@dataclass(frozen=True)
class Hyperparams:
    """Weights, sizes and tolerances for one session.

    Construction validates every scalar; anything pool-dependent
    (display_size <= n, n_clusters <= n) is checked by check_pool_size
    once a dataset is known.
    """

    alpha: float = 1.0
    beta: float = 1.0
    # Default spread weight is 2.0: the fixed-point update contracts the
    # cluster-mass error by a factor alpha/gamma per sweep, so gamma must
    # strictly exceed alpha for the iteration to settle.
    gamma: float = 2.0
    n_clusters: int = 16
    display_size: int = 16
    n_rounds: int = 10
    fp_tol: float = 1e-8
    fp_max_iter: int = 100
    score_clamp: float = 1e-3
    mass_floor: float = 1e-12
    seed: int = 0
    svm_reg: float = 1e-3
    svm_epochs: int = 200
    solve_unlabeled_only: bool = False

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidArgument("alpha must be finite and >= 0")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise InvalidArgument("beta must be finite and >= 0")
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise InvalidArgument("gamma must be positive")
        for name in ("n_clusters", "display_size", "n_rounds", "fp_max_iter",
                     "svm_epochs"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidArgument(f"{name} must be a positive integer")
        if not (0 < self.fp_tol < 1):
            raise InvalidArgument("fp_tol must lie in (0, 1)")
        if not (0 < self.score_clamp < 0.5):
            raise InvalidArgument("score_clamp must lie in (0, 0.5)")
        if not (0 < self.mass_floor < 1e-3):
            raise InvalidArgument("mass_floor must lie in (0, 1e-3)")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidArgument("seed must be a non-negative integer")
        if not np.isfinite(self.svm_reg) or self.svm_reg <= 0:
            raise InvalidArgument("svm_reg must be positive")

    def check_pool_size(self, n: int) -> None:
        """Raise if sizes are incompatible with a pool of n samples."""
        if self.n_clusters > n:
            raise InvalidArgument(
                f"n_clusters={self.n_clusters} exceeds pool size {n}")
        if self.display_size > n:
            raise InvalidArgument(
                f"display_size={self.display_size} exceeds pool size {n}")

    def with_seed(self, seed: int) -> "Hyperparams":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class Violation:
    category: str
    message: str
    row: int | None = None
    col: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    def by_category(self, category: str) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.category == category)


def validate_dataset(dataset: Dataset,
                     labels: LabelVector | np.ndarray | None = None
                     ) -> ValidationReport:
    """Structural checks on a dataset (and optional aligned labels).

    Returns a report listing every violation found instead of raising,
    so callers can surface all problems at once and then decide whether
    to abort.
    """
    out: list[Violation] = []
    feats = dataset.features
    if feats.ndim != 2:
        out.append(Violation(DIMENSION_MISMATCH,
                             f"features must be 2-D, got ndim={feats.ndim}"))
    elif feats.shape[0] < 1 or feats.shape[1] < 1:
        out.append(Violation(DIMENSION_MISMATCH,
                             f"features shape {feats.shape} is degenerate"))
    n = feats.shape[0] if feats.ndim >= 1 else 0

    if len(dataset.ids) != n:
        out.append(Violation(
            DIMENSION_MISMATCH,
            f"{len(dataset.ids)} ids for {n} feature rows"))
    if dataset.patch_refs is not None and len(dataset.patch_refs) != n:
        out.append(Violation(
            DIMENSION_MISMATCH,
            f"{len(dataset.patch_refs)} patch refs for {n} feature rows"))

    if feats.ndim == 2:
        bad = np.argwhere(~np.isfinite(feats))
        for r, c in bad:
            out.append(Violation(NON_FINITE,
                                 f"non-finite feature at ({int(r)}, {int(c)})",
                                 row=int(r), col=int(c)))

    seen: dict[str, int] = {}
    for i, sid in enumerate(dataset.ids):
        if sid in seen:
            out.append(Violation(DUPLICATE_ID,
                                 f"id {sid!r} at rows {seen[sid]} and {i}",
                                 row=i))
        else:
            seen[sid] = i

    if labels is not None:
        vals = labels.values if isinstance(labels, LabelVector) else \
            np.asarray(labels)
        if vals.shape[0] != n:
            out.append(Violation(
                LABEL_LENGTH_MISMATCH,
                f"{vals.shape[0]} labels for {n} samples"))
        outside = ~np.isin(vals, _LABEL_DOMAIN)
        for r in np.flatnonzero(outside):
            out.append(Violation(LABEL_DOMAIN,
                                 f"label {int(vals[r])} at row {int(r)} "
                                 f"outside {{+1, -1, 0}}", row=int(r)))

    return ValidationReport(ok=not out, violations=tuple(out))


def require_valid(dataset: Dataset,
                  labels: LabelVector | np.ndarray | None = None) -> None:
    """Raise InvalidArgument listing every violation, or return silently."""
    report = validate_dataset(dataset, labels)
    if not report.ok:
        lines = "; ".join(v.message for v in report.violations[:8])
        more = len(report.violations) - 8
        if more > 0:
            lines += f"; and {more} more"
        raise InvalidArgument(f"invalid dataset: {lines}")
