"""
Canonical data types: plain images, label vectors, mix records and encoded datasets.

Images are numpy arrays of shape (height, width, channels). Plain images live
in [0, 1]; encodings live in [-1, 1].
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigError, LabelError, ShapeError

SUM_TOL = 1e-9
ZERO_TOL = 1e-9


def as_image(pixels) -> np.ndarray:
    """Promote (H, W) arrays to (H, W, 1) and return float64."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ShapeError(f"image must be (height, width, channels), got shape {arr.shape}")
    return arr


def check_label(probs, one_hot_only: bool = False) -> np.ndarray:
    vec = np.asarray(probs, dtype=np.float64)
    if vec.ndim != 1:
        raise LabelError(f"label must be a vector, got shape {vec.shape}")
    if (vec < 0).any():
        raise LabelError("label has negative entries")
    if one_hot_only:
        if np.count_nonzero(vec) != 1 or not np.isclose(vec.max(), 1.0, atol=SUM_TOL):
            raise LabelError(f"label is not one-hot: {vec}")
    elif abs(vec.sum() - 1.0) > SUM_TOL:
        raise LabelError(f"label does not sum to 1: {vec.sum()}")
    return vec


@dataclass(frozen=True)
class EncodedImage:
    pixels: np.ndarray
    label: np.ndarray


@dataclass(frozen=True, eq=False)
class MixRecord:
    """Ground-truth provenance of one encoding (the phi map plus lambda and sigma)."""

    private_indices: Tuple[int, int]
    public_indices: Tuple[int, ...]
    lambdas: np.ndarray
    sigma: np.ndarray
    epoch: int

    def __post_init__(self):
        if len(self.private_indices) != 2 or self.private_indices[0] == self.private_indices[1]:
            raise ConfigError(f"private indices must be two distinct indices: {self.private_indices}")
        if len(set(self.public_indices)) != len(self.public_indices):
            raise ConfigError(f"public indices repeat: {self.public_indices}")
        if len(self.lambdas) != 2 + len(self.public_indices):
            raise ConfigError("lambdas must have one weight per mixed image")
        if (np.asarray(self.lambdas) <= 0).any() or abs(float(np.sum(self.lambdas)) - 1.0) > SUM_TOL:
            raise ConfigError(f"lambdas must be positive and sum to 1: {self.lambdas}")
        if self.epoch < 0:
            raise ConfigError("epoch must be non-negative")

    @property
    def k(self) -> int:
        return len(self.lambdas)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixRecord):
            return NotImplemented
        return (
            tuple(self.private_indices) == tuple(other.private_indices)
            and tuple(self.public_indices) == tuple(other.public_indices)
            and np.array_equal(self.lambdas, other.lambdas)
            and np.array_equal(self.sigma, other.sigma)
            and self.epoch == other.epoch
        )


@dataclass(frozen=True)
class DatasetParams:
    k: int
    epochs: int
    num_private: int
    num_classes: int
    shape: Tuple[int, int, int]
    sign_flip: bool = True
    public_pool_size: int = 0
    release_abs: bool = False

    @property
    def pixel_count(self) -> int:
        h, w, c = self.shape
        return h * w * c


@dataclass(eq=False)
class EncodedDataset:
    """Encodings (float32 pixels, float64 mixed labels) plus an optional truth sidecar."""

    pixels: np.ndarray
    labels: np.ndarray
    params: DatasetParams
    ground_truth: Optional[List[MixRecord]] = None

    def __post_init__(self):
        if self.pixels.ndim != 4 or tuple(self.pixels.shape[1:]) != tuple(self.params.shape):
            raise ShapeError(f"pixels shape {self.pixels.shape} does not match {self.params.shape}")
        if self.labels.shape != (self.pixels.shape[0], self.params.num_classes):
            raise ShapeError(f"labels shape {self.labels.shape} does not match encodings")
        if self.ground_truth is not None:
            _check_truth(self.ground_truth, self.params, len(self))

    def __len__(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EncodedDataset):
            return NotImplemented
        truth_equal = (self.ground_truth is None) == (other.ground_truth is None)
        if truth_equal and self.ground_truth is not None:
            truth_equal = self.ground_truth == other.ground_truth
        return (
            self.params == other.params
            and np.array_equal(self.pixels, other.pixels)
            and np.array_equal(self.labels, other.labels)
            and truth_equal
        )

    def encoding(self, i: int) -> EncodedImage:
        return EncodedImage(self.pixels[i].astype(np.float64), self.labels[i])

    def flat(self) -> np.ndarray:
        """(|E|, d) float64 view of the pixel tensor."""
        return self.pixels.reshape(len(self), -1).astype(np.float64)

    def blind(self) -> "EncodedDataset":
        return EncodedDataset(self.pixels, self.labels, self.params, None)


def _check_truth(records: Sequence[MixRecord], params: DatasetParams, count: int) -> None:
    expected = params.epochs * params.num_private
    if len(records) != count or count != expected:
        raise ConfigError(f"{len(records)} mix records for {count} encodings; expected {expected}")
    pairs = np.array([r.private_indices for r in records], dtype=np.int64)
    for epoch in range(params.epochs):
        block = pairs[epoch * params.num_private:(epoch + 1) * params.num_private]
        counts = np.bincount(block.ravel(), minlength=params.num_private)
        if (counts != 2).any():
            raise ConfigError(f"epoch {epoch}: every private index must appear exactly twice")
