"""Dataset construction and the on-disk dataset format.

Three sources are supported: co-registered image pairs cut into a patch
grid, a seeded synthetic generator shaped like the real pools (rare
positives, clustered negatives), and a plain feature CSV. Datasets
round-trip through a directory layout of manifest.json + raw binary
feature/label blobs + optional patch PNGs.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DataIOError, InvalidArgument
from .types import NEGATIVE, POSITIVE, UNKNOWN, Dataset, LabelVector

FORMAT_NAME = "frugalcd-dataset"
FORMAT_VERSION = 1

_LABEL_BYTE = {UNKNOWN: 0, POSITIVE: 1, NEGATIVE: 2}
_BYTE_LABEL = {v: k for k, v in _LABEL_BYTE.items()}


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping tiling parameters for a co-registered image pair."""

    patch_size: int = 30
    stride: int = 30

    def __post_init__(self) -> None:
        if self.patch_size < 1 or self.stride < 1:
            raise InvalidArgument("patch_size and stride must be >= 1")


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated pool.

    Modes sit on a sphere of radius separation / sqrt(2), so every pair
    of mode centers is exactly `separation` apart in expectation of the
    orthogonal case and every mode is an extreme point of the hull; the
    last mode is the positive one. positive count = round(n * rate).

    The default scale keeps squared distances to cluster centers
    (d * noise^2, about 1.8) on the same order as the display objective
    weights; crank both numbers up proportionally and representativity
    silently drowns the diversity and ambiguity terms.
    """

    n: int = 2200
    d: int = 20
    positive_rate: float = 39 / 2200
    n_modes: int = 10
    separation: float = 2.0
    noise: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2 or self.d < 1:
            raise InvalidArgument("need n >= 2 and d >= 1")
        if not 0.0 < self.positive_rate < 1.0:
            raise InvalidArgument("positive_rate must lie in (0, 1)")
        if self.n_modes < 2:
            raise InvalidArgument("need n_modes >= 2 (one is the positive)")
        if self.separation <= 0 or self.noise <= 0:
            raise InvalidArgument("separation and noise must be positive")


def _image_to_float(name: str, img) -> tuple[np.ndarray, np.ndarray]:
    """(float in [0,1], uint8) views of an image array."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise InvalidArgument(f"{name} must be a 2-D or 3-D image array")
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0, arr
    arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite pixels")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidArgument(f"float {name} must have pixels in [0, 1]")
    return arr, np.round(arr * 255.0).astype(np.uint8)


def extract_patch_pairs(ref_image, test_image, grid: PatchGrid = PatchGrid(),
                        feature_mode: str = "concat"
                        ) -> tuple[Dataset, np.ndarray]:
    """Cut two co-registered images into a row-major grid of patch pairs.

    Only patches that fit entirely inside the image are produced; with
    patch_size == stride == 30 a 2400 x 1652 image yields an 80 x 55
    grid of 4400 pairs. feature_mode "concat" flattens both patches into
    one vector; "absdiff" flattens |ref - test|.

    Returns (dataset, patches) where patches is a uint8 array of shape
    (n, 2, patch_size, patch_size, channels) holding the raw pixels for
    display, ref first.
    """
    if feature_mode not in ("concat", "absdiff"):
        raise InvalidArgument(f"unknown feature_mode {feature_mode!r}")
    ref_f, ref_u8 = _image_to_float("ref_image", ref_image)
    test_f, test_u8 = _image_to_float("test_image", test_image)
    if ref_f.shape != test_f.shape:
        raise InvalidArgument(
            f"image shapes differ: {ref_f.shape} vs {test_f.shape}")

    h, w, ch = ref_f.shape
    ps, st = grid.patch_size, grid.stride
    rows = range(0, h - ps + 1, st)
    cols = range(0, w - ps + 1, st)

    ids, feats, patches = [], [], []
    for gr, r0 in enumerate(rows):
        for gc, c0 in enumerate(cols):
            p = ref_f[r0:r0 + ps, c0:c0 + ps]
            q = test_f[r0:r0 + ps, c0:c0 + ps]
            if feature_mode == "concat":
                feats.append(np.concatenate([p.ravel(), q.ravel()]))
            else:
                feats.append(np.abs(p - q).ravel())
            ids.append(f"r{gr:03d}c{gc:03d}")
            patches.append(np.stack([ref_u8[r0:r0 + ps, c0:c0 + ps],
                                     test_u8[r0:r0 + ps, c0:c0 + ps]]))
    if not feats:
        raise InvalidArgument("images are smaller than one patch")
    dataset = Dataset(np.asarray(feats, dtype=np.float32), tuple(ids))
    return dataset, np.asarray(patches, dtype=np.uint8)


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()
                       ) -> tuple[Dataset, LabelVector]:
    """Seeded gaussian-mode pool with an exact count of rare positives.

    n_modes unit directions are drawn and placed on a sphere of radius
    separation / sqrt(2); negatives are spread over the first
    n_modes - 1 modes, positives all come from the last. Samples are
    shuffled so class and mode are independent of position.
    """
    rng = np.random.default_rng(spec.seed)
    n_pos = int(round(spec.n * spec.positive_rate))
    if not 1 <= n_pos < spec.n:
        raise InvalidArgument(
            f"positive_rate {spec.positive_rate} rounds to {n_pos} "
            f"positives out of {spec.n}")
    n_neg = spec.n - n_pos

    radius = spec.separation / np.sqrt(2.0)
    dirs = rng.standard_normal((spec.n_modes, spec.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    centers = radius * dirs

    neg_modes = rng.integers(0, spec.n_modes - 1, size=n_neg)
    X = np.empty((spec.n, spec.d))
    X[:n_neg] = centers[neg_modes] + spec.noise * rng.standard_normal(
        (n_neg, spec.d))
    X[n_neg:] = centers[-1] + spec.noise * rng.standard_normal(
        (n_pos, spec.d))
    y = np.concatenate([np.full(n_neg, NEGATIVE, dtype=np.int8),
                        np.full(n_pos, POSITIVE, dtype=np.int8)])

    perm = rng.permutation(spec.n)
    X, y = X[perm], y[perm]
    ids = tuple(f"s{i:05d}" for i in range(spec.n))
    return Dataset(X.astype(np.float32), ids), LabelVector(y)


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    """Parse "default" or "key=value,..." into a SyntheticSpec.

    Example: "n=400,d=8,seed=3,positive_rate=0.05".
    """
    if text.strip() in ("", "default"):
        return SyntheticSpec()
    kwargs = {}
    casts = {"n": int, "d": int, "n_modes": int, "seed": int,
             "positive_rate": float, "separation": float, "noise": float}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidArgument(f"bad synthetic spec fragment {part!r}")
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in casts:
            raise InvalidArgument(f"unknown synthetic spec key {key!r}")
        try:
            kwargs[key] = casts[key](value.strip())
        except ValueError:
            raise InvalidArgument(
                f"bad value for synthetic spec key {key!r}: {value!r}"
            ) from None
    return SyntheticSpec(**kwargs)


def _atomic_write(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def save_dataset(path, dataset: Dataset, labels: LabelVector | None = None,
                 patches: np.ndarray | None = None,
                 metadata: dict | None = None) -> None:
    """Write a dataset directory.

    Layout: manifest.json (format name, version, shapes, ids, metadata),
    features.bin (row-major little-endian float32), optional labels.bin
    (one byte per sample: 0 unknown, 1 positive, 2 negative), optional
    patches/<id>_{ref,test}.png. Each file lands via atomic rename; the
    manifest is written last so a partially written directory is never
    mistaken for a complete one.
    """
    from PIL import Image

    os.makedirs(path, exist_ok=True)
    feats = np.ascontiguousarray(dataset.features, dtype="<f4")
    _atomic_write(os.path.join(path, "features.bin"), feats.tobytes())

    if labels is not None:
        if len(labels) != dataset.n:
            raise InvalidArgument(f"{len(labels)} labels for {dataset.n} "
                                  "samples")
        raw = np.array([_LABEL_BYTE[int(v)] for v in labels.values],
                       dtype=np.uint8)
        _atomic_write(os.path.join(path, "labels.bin"), raw.tobytes())

    patch_refs = None
    if patches is not None:
        if patches.shape[0] != dataset.n or patches.shape[1] != 2:
            raise InvalidArgument("patches must have shape (n, 2, ...)")
        pdir = os.path.join(path, "patches")
        os.makedirs(pdir, exist_ok=True)
        patch_refs = []
        for i, sid in enumerate(dataset.ids):
            pair = []
            for side, img in (("ref", patches[i, 0]), ("test", patches[i, 1])):
                arr = img if img.ndim == 3 else img[:, :, None]
                if arr.shape[2] == 1:
                    arr = arr[:, :, 0]
                buf = io.BytesIO()
                Image.fromarray(arr).save(buf, format="PNG")
                rel = os.path.join("patches", f"{sid}_{side}.png")
                _atomic_write(os.path.join(path, rel), buf.getvalue())
                pair.append(rel)
            patch_refs.append(pair)

    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n": dataset.n,
        "d": dataset.d,
        "ids": list(dataset.ids),
        "has_labels": labels is not None,
        "patch_refs": patch_refs,
        "metadata": metadata or {},
    }
    blob = json.dumps(manifest, indent=1, sort_keys=True).encode("utf-8")
    _atomic_write(os.path.join(path, "manifest.json"), blob)


def load_dataset(path) -> tuple[Dataset, LabelVector | None, dict]:
    """Read a dataset directory written by save_dataset.

    Returns (dataset, labels-or-None, metadata). A manifest that is not
    this format (or a later version) raises DataFormatError; a feature
    or label blob whose size disagrees with the manifest raises
    DataIOError naming the expected and actual byte counts.
    """
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataIOError(f"cannot read {manifest_path}: {exc}") from exc
    try:
        manifest = json.loads(raw)
    except ValueError as exc:
        raise DataFormatError(
            f"{manifest_path} is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != FORMAT_NAME:
        raise DataFormatError(f"{manifest_path} is not a {FORMAT_NAME} "
                              "manifest")
    if manifest.get("version") != FORMAT_VERSION:
        raise DataFormatError(
            f"unsupported {FORMAT_NAME} version {manifest.get('version')!r}; "
            f"this build reads version {FORMAT_VERSION}")

    n, d = int(manifest["n"]), int(manifest["d"])
    feat_path = os.path.join(path, "features.bin")
    try:
        with open(feat_path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataIOError(f"cannot read {feat_path}: {exc}") from exc
    expected = n * d * 4
    if len(blob) != expected:
        raise DataIOError(f"{feat_path}: expected {expected} bytes "
                          f"({n} x {d} float32), found {len(blob)}")
    feats = np.frombuffer(blob, dtype="<f4").reshape(n, d)

    labels = None
    if manifest.get("has_labels"):
        lab_path = os.path.join(path, "labels.bin")
        try:
            with open(lab_path, "rb") as fh:
                lraw = fh.read()
        except OSError as exc:
            raise DataIOError(f"cannot read {lab_path}: {exc}") from exc
        if len(lraw) != n:
            raise DataIOError(f"{lab_path}: expected {n} bytes, "
                              f"found {len(lraw)}")
        codes = np.frombuffer(lraw, dtype=np.uint8)
        if not np.isin(codes, list(_BYTE_LABEL)).all():
            raise DataFormatError(f"{lab_path} contains label bytes outside "
                                  "{0, 1, 2}")
        labels = LabelVector(np.array([_BYTE_LABEL[int(c)] for c in codes],
                                      dtype=np.int8))

    refs = manifest.get("patch_refs")
    patch_refs = None
    if refs is not None:
        patch_refs = tuple((os.path.join(path, a), os.path.join(path, b))
                           for a, b in refs)
    dataset = Dataset(feats.copy(), tuple(manifest["ids"]), patch_refs)
    return dataset, labels, dict(manifest.get("metadata") or {})


def load_feature_csv(path) -> tuple[Dataset, LabelVector]:
    """Read "id,y,f_1..f_d" rows; y may be +1, -1, or empty for unknown.

    Every row must have the same number of feature columns; violations
    raise DataFormatError naming the line.
    """
    import csv

    ids: list[str] = []
    ys: list[int] = []
    feats: list[list[float]] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or [h.strip() for h in header[:2]] != ["id", "y"]:
            raise DataFormatError(
                f"{path}: header must start with 'id,y', got {header!r}")
        width = len(header) - 2
        if width < 1:
            raise DataFormatError(f"{path}: no feature columns in header")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}:{line_no}: expected {len(header)} fields, "
                    f"got {len(row)}")
            ids.append(row[0])
            y = row[1].strip()
            if y in ("", "0", "?"):
                ys.append(UNKNOWN)
            elif y in ("1", "+1"):
                ys.append(POSITIVE)
            elif y == "-1":
                ys.append(NEGATIVE)
            else:
                raise DataFormatError(f"{path}:{line_no}: bad label {y!r}")
            try:
                feats.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise DataFormatError(
                    f"{path}:{line_no}: bad feature value ({exc})") from None
    if not ids:
        raise DataFormatError(f"{path}: no data rows")
    dataset = Dataset(np.asarray(feats, dtype=np.float32), tuple(ids))
    return dataset, LabelVector(np.asarray(ys, dtype=np.int8))
