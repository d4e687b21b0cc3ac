"""
InstaHide encoder: epoch pairing, XMix with sign mask, YMix.

Draw order for one dataset (single MtState, seeded with ``cfg.seed``):

    for each epoch:
        p1 = shuffle(n)
        p2 = shuffle(n), repeated until p1[i] != p2[i] for every i
        for each position i:
            k-1 real draws     -> lambda as spacings of the sorted draws
            k-2 public draws   -> mt_sample(public_pool_size, k-2)
            d sign draws       -> +1 iff u32 < 2**31

Sign draws are consumed even with sign_flip off (the mask is then all ones),
so toggling the flag never shifts the stream.
"""

from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np
from pydantic import Field, model_validator

from core.config import LabConfig
from core.errors import ConfigError, ShapeError
from core.mt19937 import MASK32, MtState, mt_sample, mt_seed, mt_shuffle
from core.types import (
    SUM_TOL,
    DatasetParams,
    EncodedDataset,
    MixRecord,
    as_image,
    check_label,
)
from utils import get_logger

log = get_logger(__name__)

SIGN_THRESHOLD = 1 << 31


class EncoderConfig(LabConfig):
    k: int = Field(4, ge=2)
    epochs: int = Field(1, ge=1)
    sign_flip: bool = True
    public_pool_size: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, le=MASK32)
    release_abs: bool = False

    @model_validator(mode="after")
    def _pool_covers_mix(self):
        if self.k > 2 and self.public_pool_size < self.k - 2:
            raise ValueError(f"k={self.k} needs a public pool of at least {self.k - 2} images")
        return self


@dataclass
class PrivateDataset:
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.images.ndim != 4:
            raise ShapeError(f"private images must be (count, H, W, C), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ShapeError(f"{len(self.images)} images but {len(self.labels)} labels")
        for label in self.labels:
            check_label(label, one_hot_only=True)
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ShapeError("private pixels must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def num_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return self.labels.argmax(axis=1)


@dataclass
class PublicPool:
    images: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        if self.images.ndim != 4:
            raise ShapeError(f"public images must be (count, H, W, C), got {self.images.shape}")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ShapeError("public pixels must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)

    @classmethod
    def empty(cls, shape) -> "PublicPool":
        return cls(np.zeros((0, *shape), dtype=np.float64))


def _check_weights(lambdas, count: int) -> np.ndarray:
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.shape != (count,):
        raise ShapeError(f"expected {count} mixing weights, got shape {lam.shape}")
    if (lam < 0).any() or abs(lam.sum() - 1.0) > SUM_TOL:
        raise ConfigError(f"mixing weights must be non-negative and sum to 1: {lam}")
    return lam


def xmix(privates: Sequence, publics: Sequence, lambdas, sigma) -> np.ndarray:
    """sigma * (l1 x1 + l2 x2 + sum l_{i+2} p_i), in float64."""
    if len(privates) != 2:
        raise ShapeError(f"xmix needs exactly 2 private images, got {len(privates)}")
    images = [as_image(x) for x in (*privates, *publics)]
    shape = images[0].shape
    if any(img.shape != shape for img in images):
        raise ShapeError("all mixed images must share one shape")
    lam = _check_weights(lambdas, len(images))
    mixed = np.tensordot(lam, np.stack(images), axes=1)
    sig = np.asarray(sigma)
    if sig.size != mixed.size:
        raise ShapeError(f"sign mask has {sig.size} entries for {mixed.size} pixels")
    if not np.isin(sig, (-1, 1)).all():
        raise ConfigError("sign mask entries must be -1 or +1")
    return mixed * sig.reshape(shape)


def ymix(y_i, y_j, lambdas) -> np.ndarray:
    """Label mix; public images carry no label mass."""
    a = check_label(y_i, one_hot_only=True)
    b = check_label(y_j, one_hot_only=True)
    if a.shape != b.shape:
        raise ShapeError("labels have different class counts")
    l1, l2 = float(lambdas[0]), float(lambdas[1])
    if l1 <= 0 or l2 <= 0:
        raise ConfigError(f"private weights must be positive: ({l1}, {l2})")
    return l1 * a + l2 * b


def lambda_cuts_degenerate(cuts: np.ndarray) -> bool:
    """A zero cut or a repeated cut would give some image zero weight."""
    ordered = np.sort(np.asarray(cuts))
    return bool(ordered[0] == 0 or (np.diff(ordered) == 0).any())


def draw_lambdas(state: MtState, k: int) -> np.ndarray:
    """k-1 sorted uniform cuts of [0, 1]; a degenerate cut set is redrawn whole."""
    cuts = np.sort(np.array([state.next_f64() for _ in range(k - 1)], dtype=np.float64))
    while lambda_cuts_degenerate(cuts):
        cuts = np.sort(np.array([state.next_f64() for _ in range(k - 1)], dtype=np.float64))
    return np.diff(np.concatenate(([0.0], cuts, [1.0])))


def draw_sigma(state: MtState, d: int, sign_flip: bool) -> np.ndarray:
    draws = state.next_u32_array(d)
    if not sign_flip:
        return np.ones(d, dtype=np.int8)
    return np.where(draws < SIGN_THRESHOLD, 1, -1).astype(np.int8)


def draw_epoch_pairing(state: MtState, n: int) -> List[tuple]:
    p1 = mt_shuffle(state, n)
    p2 = mt_shuffle(state, n)
    while any(a == b for a, b in zip(p1, p2)):
        p2 = mt_shuffle(state, n)
    return list(zip(p1, p2))


def iter_mix_records(state: MtState, num_private: int, k: int, epochs: int,
                     pool_size: int, d: int, sign_flip: bool) -> Iterator[MixRecord]:
    """Replays the encoder's random choices without touching any pixels."""
    if num_private < 2:
        raise ConfigError(f"need at least 2 private images, got {num_private}")
    for epoch in range(epochs):
        for a, b in draw_epoch_pairing(state, num_private):
            lam = draw_lambdas(state, k)
            publics = tuple(mt_sample(state, pool_size, k - 2)) if k > 2 else ()
            sigma = draw_sigma(state, d, sign_flip)
            yield MixRecord((a, b), publics, lam, sigma, epoch)


def mix_records(cfg: EncoderConfig, num_private: int, d: int) -> List[MixRecord]:
    state = mt_seed(cfg.seed)
    return list(iter_mix_records(state, num_private, cfg.k, cfg.epochs, cfg.public_pool_size, d, cfg.sign_flip))


def render_encoding(record: MixRecord, priv: PrivateDataset, pub: Optional[PublicPool],
                    release_abs: bool = False) -> np.ndarray:
    a, b = record.private_indices
    publics = [pub.images[j] for j in record.public_indices] if record.public_indices else []
    mixed = xmix((priv.images[a], priv.images[b]), publics, record.lambdas,
                 np.ones(record.sigma.shape, dtype=np.int8))
    if release_abs:
        return np.abs(mixed)
    return mixed * record.sigma.reshape(mixed.shape)


def encode_dataset(priv: PrivateDataset, pub: Optional[PublicPool], cfg: EncoderConfig) -> EncodedDataset:
    n = len(priv)
    if n < 2:
        raise ConfigError(f"need at least 2 private images, got {n}")
    shape = tuple(priv.images.shape[1:])
    pool_size = cfg.public_pool_size if cfg.k > 2 else 0
    if cfg.k > 2:
        if pub is None or len(pub) < pool_size:
            have = 0 if pub is None else len(pub)
            raise ConfigError(f"public pool has {have} images, config declares {pool_size}")
        if tuple(pub.images.shape[1:]) != shape:
            raise ShapeError(f"public images {pub.images.shape[1:]} do not match private {shape}")

    d = int(np.prod(shape))
    log.info(f"Encoding {n} private images: k={cfg.k}, epochs={cfg.epochs}, "
             f"sign_flip={cfg.sign_flip}, release_abs={cfg.release_abs}, seed={cfg.seed}")

    records = mix_records(cfg, n, d)
    pixels = np.empty((len(records), *shape), dtype=np.float32)
    labels = np.empty((len(records), priv.num_classes), dtype=np.float64)
    for i, rec in enumerate(records):
        pixels[i] = render_encoding(rec, priv, pub, cfg.release_abs)
        a, b = rec.private_indices
        labels[i] = ymix(priv.labels[a], priv.labels[b], rec.lambdas)

    params = DatasetParams(
        k=cfg.k,
        epochs=cfg.epochs,
        num_private=n,
        num_classes=priv.num_classes,
        shape=shape,
        sign_flip=cfg.sign_flip,
        public_pool_size=pool_size,
        release_abs=cfg.release_abs,
    )
    log.info(f"Encoded {len(records)} images; each private image used {2 * cfg.epochs} times")
    return EncodedDataset(pixels, labels, params, ground_truth=records)


def encoder_config_for(params: DatasetParams, seed: int = 0) -> EncoderConfig:
    """The EncoderConfig an attacker can read off a dataset header."""
    return EncoderConfig.create(
        k=params.k,
        epochs=params.epochs,
        sign_flip=params.sign_flip,
        public_pool_size=params.public_pool_size,
        seed=seed,
        release_abs=params.release_abs,
    )
