"""Linear classifier trained with the Pegasos subgradient method.

Hand-rolled on purpose: the per-sample update order, the pocket rule and
the checkpoint bytes are all pinned by tests, and the training sets here
are tiny (tens to hundreds of rows), so there is nothing to gain from a
heavyweight dependency.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DataIOError, InvalidArgument, InvalidState
from .types import Dataset

_MAGIC = b"FCLM0001"


@dataclass(frozen=True)
class LinearModel:
    """Affine scorer sign(w . x + b); single_class marks degenerate fits."""

    weights: np.ndarray
    bias: float
    trained_on: int
    single_class: bool = False


def hinge_objective(weights, bias, features, labels, reg: float) -> float:
    """Mean hinge loss plus (reg / 2) ||w||^2; the bias is unregularized."""
    w = np.asarray(weights, dtype=np.float64)
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    margins = y * (X @ w + bias)
    return float(0.5 * reg * (w @ w)
                 + np.maximum(0.0, 1.0 - margins).mean())


def hinge_subgradient(weights, bias, features, labels, reg: float
                      ) -> tuple[np.ndarray, float]:
    """Subgradient of hinge_objective in (w, b).

    At margins exactly 1 the hinge is non-differentiable; this picks the
    zero branch (the sample does not contribute), which is a valid
    subgradient.
    """
    w = np.asarray(weights, dtype=np.float64)
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    margins = y * (X @ w + bias)
    active = margins < 1.0
    m = X.shape[0]
    gw = reg * w - (y[active, None] * X[active]).sum(axis=0) / m
    gb = -float(y[active].sum()) / m
    return gw, gb


def train_svm(features, labels, reg: float = 1e-3, epochs: int = 200,
              seed: int = 0) -> LinearModel:
    """Pegasos with a pocket: keep the best full-batch objective seen.

    One epoch visits every labeled sample once in a seeded shuffled
    order, stepping with eta_t = 1 / (reg * t + 1) on the per-sample
    regularized hinge. The +1 offsets the classic 1 / (reg * t)
    schedule so the first steps are O(1) instead of O(1 / reg); without
    it the unregularized bias takes a 1 / reg jump at t = 1 that the
    decay never walks back on small label sets. After each epoch the
    full-batch objective is evaluated and the best (w, b) is kept; the
    zero model is the initial pocket entry, so the returned model never
    scores worse than it.

    A single-class label set cannot anchor a margin; the returned model
    is then the constant scorer (w = 0, b = sign of the one class) with
    single_class=True.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2:
        raise InvalidArgument("features must be a 2-D array")
    if X.shape[0] == 0:
        raise InvalidState("cannot train on zero labeled samples")
    if y.shape != (X.shape[0],):
        raise InvalidArgument("labels must align with feature rows")
    if not np.isin(y, (-1, 1)).all():
        raise InvalidArgument("training labels must be +1 or -1")
    if not np.all(np.isfinite(X)):
        raise InvalidArgument("features contain non-finite entries")
    if reg <= 0:
        raise InvalidArgument("reg must be positive")
    if epochs < 1:
        raise InvalidArgument("epochs must be >= 1")

    y = y.astype(np.float64)
    if np.all(y == y[0]):
        return LinearModel(weights=np.zeros(X.shape[1]), bias=float(y[0]),
                           trained_on=X.shape[0], single_class=True)

    m, d = X.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    best_w, best_b = w.copy(), b
    best_obj = hinge_objective(best_w, best_b, X, y, reg)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(m):
            t += 1
            eta = 1.0 / (reg * t + 1.0)
            if y[i] * (X[i] @ w + b) < 1.0:
                w = (1.0 - eta * reg) * w + eta * y[i] * X[i]
                b += eta * y[i]
            else:
                w = (1.0 - eta * reg) * w
        obj = hinge_objective(w, b, X, y, reg)
        if obj < best_obj:
            best_w, best_b, best_obj = w.copy(), b, obj
    return LinearModel(weights=best_w, bias=float(best_b), trained_on=m)


def decision_scores(model: LinearModel, dataset) -> np.ndarray:
    """Raw margins w . x + b for every row of the dataset or array."""
    X = dataset.features if isinstance(dataset, Dataset) else dataset
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise InvalidArgument(
            f"features of dimension {model.weights.shape[0]} expected")
    return X @ model.weights + model.bias


def normalize_scores(raw, score_clamp: float = 1e-3) -> np.ndarray:
    """Pool-wise min-max rescale of margins into [clamp, 1 - clamp].

    A constant score vector (max == min) maps to all 0.5; the clamp keeps
    every value strictly inside (0, 1) so downstream entropies are finite.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise InvalidArgument("scores contain non-finite entries")
    if not 0 < score_clamp < 0.5:
        raise InvalidArgument("score_clamp must lie in (0, 0.5)")
    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        return np.full(raw.shape, 0.5)
    scaled = (raw - lo) / (hi - lo)
    return np.clip(scaled, score_clamp, 1.0 - score_clamp)


def scoring_matrix(fhat) -> np.ndarray:
    """Two-column (score, complement) matrix used by the ambiguity term.

    Requires entries strictly inside (0, 1); rows sum to 1 exactly in
    double precision because 1 - f is computed in the same rounding.
    """
    f = np.asarray(fhat, dtype=np.float64)
    if f.size and (f.min() <= 0.0 or f.max() >= 1.0):
        raise InvalidArgument("normalized scores must lie strictly in (0, 1)")
    return np.stack([f, 1.0 - f], axis=1)


def evaluate_eer(model: LinearModel, eval_features, eval_labels) -> float:
    """Mean of the two per-class error rates at decision threshold zero.

    Predicts +1 exactly when the margin is > 0, so ties at zero count
    against the positive class. Requires both classes present.
    """
    y = np.asarray(eval_labels)
    if not np.isin(y, (-1, 1)).all():
        raise InvalidArgument("evaluation labels must be +1 or -1")
    pos = y == 1
    neg = y == -1
    if not pos.any() or not neg.any():
        raise InvalidArgument("evaluation set must contain both classes")
    margins = decision_scores(model, eval_features)
    err_pos = float((margins[pos] <= 0.0).mean())
    err_neg = float((margins[neg] > 0.0).mean())
    return 0.5 * (err_pos + err_neg)


def config_digest(text: str) -> bytes:
    """32-byte digest identifying the training configuration."""
    return hashlib.sha256(text.encode("utf-8")).digest()


def save_model(model: LinearModel, path, config: str = "") -> None:
    """Binary checkpoint: magic, dims, flags, config digest, weights.

    Layout (little-endian): 8-byte magic, u32 d, u32 trained_on,
    u8 single_class, f64 bias, 32-byte sha256 of `config`, then d f64
    weights. Written atomically via a temporary file.
    """
    import os

    w = np.asarray(model.weights, dtype="<f8")
    blob = (_MAGIC
            + struct.pack("<IIBd", w.shape[0], model.trained_on,
                          1 if model.single_class else 0, model.bias)
            + config_digest(config)
            + w.tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_model(path) -> tuple[LinearModel, bytes]:
    """Read a checkpoint; returns (model, config_digest).

    Unknown magic raises DataFormatError; a short file raises DataIOError
    naming the expected and actual byte counts.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataIOError(f"cannot read checkpoint {path}: {exc}") from exc

    header = len(_MAGIC) + struct.calcsize("<IIBd") + 32
    if len(blob) < len(_MAGIC) or blob[:len(_MAGIC)] != _MAGIC:
        raise DataFormatError("not a recognized model checkpoint "
                              f"(bad magic in {path})")
    if len(blob) < header:
        raise DataIOError(f"truncated checkpoint {path}: expected at least "
                          f"{header} bytes, found {len(blob)}")
    d, trained_on, flag, bias = struct.unpack_from("<IIBd", blob, len(_MAGIC))
    digest = blob[header - 32:header]
    expected = header + 8 * d
    if len(blob) != expected:
        raise DataIOError(f"truncated checkpoint {path}: expected "
                          f"{expected} bytes, found {len(blob)}")
    weights = np.frombuffer(blob, dtype="<f8", count=d, offset=header)
    model = LinearModel(weights=weights.copy(), bias=float(bias),
                        trained_on=int(trained_on),
                        single_class=bool(flag))
    return model, digest
