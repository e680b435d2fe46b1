"""Datasets, the parametric toy generator, augmentations, mixed sampling, and file IO.

Desk-scale samples are D-dimensional feature vectors. The toy generator
produces class-conditional Gaussian blobs with means on a sphere; a clone
generator re-samples around (optionally shifted) empirical class means so
real/synthetic distribution gaps can be dialed in.

Dataset files use a little-endian binary layout:

    magic "S2CO" | u32 version=1 | u8 origin (0 real, 1 synthetic)
    | u32 n_classes | u32 n_samples | u32 dim
    | n_samples * dim float32 features
    | n_samples  u32 labels (0xFFFFFFFF = unlabeled)

Features are stored in 32-bit floats; in-memory arrays are 64-bit.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadConfigError,
    BadMagicError,
    FileFormatError,
    TruncatedFileError,
    UnlabeledError,
    UnsupportedVersionError,
)
from .mathops import as_f64, l2_normalize

MAGIC = b"S2CO"
FORMAT_VERSION = 1
UNLABELED = 0xFFFFFFFF
_ORIGINS = ("real", "synthetic")


class SourceExhaustedWarning(UserWarning):
    """A sampling source was smaller than the demanded per-epoch volume."""


@dataclass
class Dataset:
    """Feature matrix plus labels; label -1 means unlabeled."""

    features: np.ndarray
    labels: np.ndarray
    origin: str
    n_classes: int

    def __post_init__(self):
        self.features = as_f64(self.features)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise BadConfigError("dataset must be a non-empty 2-D feature matrix")
        if not np.all(np.isfinite(self.features)):
            raise BadConfigError("dataset features must be finite")
        if self.labels.shape != (self.features.shape[0],):
            raise BadConfigError("labels must align with feature rows")
        if self.origin not in _ORIGINS:
            raise BadConfigError(f"origin must be one of {_ORIGINS}, got {self.origin!r}")
        if self.n_classes < 1:
            raise BadConfigError("n_classes must be >= 1")
        labeled = self.labels[self.labels >= 0]
        if labeled.size and int(labeled.max()) >= self.n_classes:
            raise BadConfigError("labels must be < n_classes")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def fully_labeled(self) -> bool:
        return bool(np.all(self.labels >= 0))


@dataclass(frozen=True)
class MixConfig:
    """Per-batch real fraction rho; 1.0 trains on real data only."""

    real_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.real_fraction <= 1.0:
            raise BadConfigError(f"real_fraction must be in [0, 1], got {self.real_fraction}")


@dataclass(frozen=True)
class AugmentationParams:
    """Vector-space view augmentations: random scale, additive noise, coordinate dropout.

    The default noise scale matches the default toy generator's
    within-class scale; rescale it when the feature scale differs.
    """

    noise_sigma: float = 4.0
    scale_range: tuple[float, float] = (0.8, 1.2)
    mask_fraction: float = 0.1

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise BadConfigError("noise_sigma must be >= 0")
        lo, hi = self.scale_range
        if not 0.0 < lo <= hi:
            raise BadConfigError(f"scale_range must satisfy 0 < lo <= hi, got {self.scale_range}")
        if not 0.0 <= self.mask_fraction < 1.0:
            raise BadConfigError("mask_fraction must be in [0, 1)")


def toy_generate(
    n_classes: int,
    per_class: int,
    dim: int,
    class_sep: float,
    within_scale: float,
    rng: np.random.Generator,
) -> Dataset:
    """Class-conditional Gaussian blobs with means on a sphere of radius class_sep.

    Samples are grouped by class (labels 0..n_classes-1 in blocks), so the
    label histogram is exactly uniform. Draw order: one Gaussian direction
    per class for the means (classes in order), then one (per_class, dim)
    Gaussian noise block per class.
    """
    if n_classes < 1 or per_class < 1 or dim < 1:
        raise BadConfigError("n_classes, per_class, and dim must be positive")
    if class_sep <= 0:
        raise BadConfigError("class_sep must be > 0")
    if within_scale < 0:
        raise BadConfigError("within_scale must be >= 0")
    means = np.stack(
        [class_sep * l2_normalize(rng.normal(0.0, 1.0, size=dim)) for _ in range(n_classes)]
    )
    features = np.empty((n_classes * per_class, dim))
    labels = np.empty(n_classes * per_class, dtype=np.int64)
    for c in range(n_classes):
        noise = rng.normal(0.0, 1.0, size=(per_class, dim))
        features[c * per_class : (c + 1) * per_class] = means[c] + within_scale * noise
        labels[c * per_class : (c + 1) * per_class] = c
    return Dataset(features=features, labels=labels, origin="real", n_classes=n_classes)


def class_means(dataset: Dataset) -> np.ndarray:
    """Empirical per-class feature means; requires every class present."""
    if not dataset.fully_labeled:
        raise UnlabeledError("class means need a fully labeled dataset")
    means = np.empty((dataset.n_classes, dataset.dim))
    for c in range(dataset.n_classes):
        rows = dataset.features[dataset.labels == c]
        if rows.shape[0] == 0:
            raise BadConfigError(f"class {c} has no samples")
        means[c] = rows.mean(axis=0)
    return means


def synthetic_clone(
    real: Dataset,
    per_class: int,
    distribution_shift: float,
    within_scale: float,
    rng: np.random.Generator,
) -> Dataset:
    """Synthetic stand-in dataset sampled around the real class means.

    Each synthetic class mean is the real empirical mean plus a Gaussian
    offset of scale distribution_shift, modeling an imperfect generator.
    Draw order: one offset vector per class, then one noise block per class.
    """
    if per_class < 1:
        raise BadConfigError("per_class must be positive")
    if distribution_shift < 0 or within_scale < 0:
        raise BadConfigError("distribution_shift and within_scale must be >= 0")
    means = class_means(real)
    offsets = np.stack(
        [distribution_shift * rng.normal(0.0, 1.0, size=real.dim) for _ in range(real.n_classes)]
    )
    features = np.empty((real.n_classes * per_class, real.dim))
    labels = np.empty(real.n_classes * per_class, dtype=np.int64)
    for c in range(real.n_classes):
        noise = rng.normal(0.0, 1.0, size=(per_class, real.dim))
        features[c * per_class : (c + 1) * per_class] = means[c] + offsets[c] + within_scale * noise
        labels[c * per_class : (c + 1) * per_class] = c
    return Dataset(
        features=features, labels=labels, origin="synthetic", n_classes=real.n_classes
    )


def split_per_class(dataset: Dataset, n_train_per_class: int) -> tuple[Dataset, Dataset]:
    """Split a labeled dataset into (train, held-out) by taking the first
    n_train_per_class samples of each class in row order."""
    if not dataset.fully_labeled:
        raise UnlabeledError("split needs labels")
    train_idx = []
    eval_idx = []
    for c in range(dataset.n_classes):
        rows = np.flatnonzero(dataset.labels == c)
        if rows.size <= n_train_per_class:
            raise BadConfigError(
                f"class {c} has {rows.size} samples, cannot hold out after {n_train_per_class}"
            )
        train_idx.extend(rows[:n_train_per_class])
        eval_idx.extend(rows[n_train_per_class:])
    def subset(idx):
        idx = np.array(idx, dtype=np.intp)
        return Dataset(
            features=dataset.features[idx].copy(),
            labels=dataset.labels[idx].copy(),
            origin=dataset.origin,
            n_classes=dataset.n_classes,
        )
    return subset(train_idx), subset(eval_idx)


def two_views(x, params: AugmentationParams, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Two independently augmented views of one sample; the input is never mutated.

    Per view, in order: scale ~ uniform(scale_range), additive noise
    ~ Gaussian(0, noise_sigma^2) per coordinate, then ceil(mask_fraction * d)
    coordinates chosen without replacement are zeroed. The first view's
    draws all precede the second view's.
    """
    x = as_f64(x)
    d = x.shape[0]
    n_masked = int(np.ceil(params.mask_fraction * d))

    def one_view() -> np.ndarray:
        scale = rng.uniform(params.scale_range[0], params.scale_range[1])
        view = x * scale + rng.normal(0.0, params.noise_sigma, size=d)
        if n_masked > 0:
            view[rng.choice(d, size=n_masked, replace=False)] = 0.0
        return view

    return one_view(), one_view()


def batches_per_epoch(real: Dataset | None, synthetic: Dataset | None, mix: MixConfig, batch_size: int) -> int:
    """Number of batches in one epoch: the primary source size over the batch size.

    The primary source is the real dataset when rho > 0, else the synthetic one.
    """
    primary = real if mix.real_fraction > 0 else synthetic
    if primary is None:
        raise BadConfigError("primary data source missing for the requested mix")
    return max(1, len(primary) // batch_size)


def mixed_batches(
    real: Dataset | None,
    synthetic: Dataset | None,
    mix: MixConfig,
    batch_size: int,
    epochs: int,
    rng: np.random.Generator,
):
    """Stream of (batch_size, dim) feature batches mixing the two sources.

    Every batch holds ceil(rho * B) real rows followed by the synthetic
    remainder. Within an epoch each source is consumed without replacement
    from a fresh permutation; a source smaller than the demanded per-epoch
    volume wraps with a reshuffle and a SourceExhaustedWarning.

    Draw order per epoch: permutation of the real source (when used), then
    permutation of the synthetic source (when used); wrap-around
    permutations are drawn at the moment of exhaustion.
    """
    if batch_size < 1:
        raise BadConfigError("batch_size must be >= 1")
    n_real = int(np.ceil(mix.real_fraction * batch_size))
    n_syn = batch_size - n_real
    if n_real > 0 and (real is None or len(real) == 0):
        raise BadConfigError("mix demands real samples but the real dataset is empty")
    if n_syn > 0 and (synthetic is None or len(synthetic) == 0):
        raise BadConfigError("mix demands synthetic samples but the synthetic dataset is empty")
    if n_real > 0 and n_syn > 0 and real.dim != synthetic.dim:
        raise BadConfigError("real and synthetic feature dims differ")
    n_batches = batches_per_epoch(real, synthetic, mix, batch_size)

    class _Source:
        def __init__(self, ds: Dataset):
            self.ds = ds
            self.perm = None
            self.cursor = 0

        def reshuffle(self):
            self.perm = rng.permutation(len(self.ds))
            self.cursor = 0

        def take(self, count: int) -> np.ndarray:
            rows = []
            while count > 0:
                if self.cursor >= len(self.ds):
                    warnings.warn(
                        f"{self.ds.origin} source exhausted mid-epoch, reshuffling",
                        SourceExhaustedWarning,
                    )
                    self.reshuffle()
                grab = min(count, len(self.ds) - self.cursor)
                rows.append(self.ds.features[self.perm[self.cursor : self.cursor + grab]])
                self.cursor += grab
                count -= grab
            return np.concatenate(rows, axis=0) if rows else np.empty((0, self.ds.dim))

    real_src = _Source(real) if n_real > 0 else None
    syn_src = _Source(synthetic) if n_syn > 0 else None
    for _ in range(epochs):
        if real_src is not None:
            real_src.reshuffle()
        if syn_src is not None:
            syn_src.reshuffle()
        for _ in range(n_batches):
            parts = []
            if real_src is not None:
                parts.append(real_src.take(n_real))
            if syn_src is not None:
                parts.append(syn_src.take(n_syn))
            yield np.concatenate(parts, axis=0)


def dataset_write(path, dataset: Dataset) -> None:
    """Write a dataset in the S2CO binary format (features quantized to float32)."""
    origin_code = _ORIGINS.index(dataset.origin)
    n, dim = dataset.features.shape
    header = MAGIC + struct.pack(
        "<IBIII", FORMAT_VERSION, origin_code, dataset.n_classes, n, dim
    )
    feats = dataset.features.astype("<f4").tobytes()
    labels = np.where(dataset.labels < 0, UNLABELED, dataset.labels).astype("<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(feats)
        fh.write(labels)


def dataset_read(path) -> Dataset:
    """Read an S2CO file, validating magic, version, and payload length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4:
        raise TruncatedFileError(f"{path}: shorter than the magic field")
    if blob[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {blob[:4]!r}")
    header_size = 4 + struct.calcsize("<IBIII")
    if len(blob) < header_size:
        raise TruncatedFileError(f"{path}: truncated header")
    version, origin_code, n_classes, n, dim = struct.unpack(
        "<IBIII", blob[4:header_size]
    )
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: version {version} unsupported")
    if origin_code not in (0, 1):
        raise FileFormatError(f"{path}: invalid origin code {origin_code}")
    expected = header_size + n * dim * 4 + n * 4
    if len(blob) < expected:
        raise TruncatedFileError(
            f"{path}: payload ends early ({len(blob)} bytes, expected {expected})"
        )
    if len(blob) > expected:
        raise FileFormatError(f"{path}: {len(blob) - expected} trailing bytes")
    feat_end = header_size + n * dim * 4
    features = (
        np.frombuffer(blob[header_size:feat_end], dtype="<f4")
        .astype(np.float64)
        .reshape(n, dim)
    )
    raw_labels = np.frombuffer(blob[feat_end:expected], dtype="<u4")
    labels = np.where(raw_labels == UNLABELED, -1, raw_labels.astype(np.int64))
    return Dataset(
        features=features,
        labels=labels,
        origin=_ORIGINS[origin_code],
        n_classes=int(n_classes),
    )
