"""
Synthetic private/public image generators with planted structure.

Each image is a faint background gradient plus a few high-contrast shapes
(rectangles, discs, bars) and light pixel noise. The class picks which shape
kinds appear and in which half of the frame the first one sits, so images of
one class look related while distinct images stay far apart under SSIM.

Private and public sets come from independent numpy generators derived from
the master seed, so the pools never share an image.
"""

from typing import Tuple

import numpy as np

from core.errors import ConfigError
from encoder.instahide import PrivateDataset, PublicPool

PRIVATE_STREAM = 0
PUBLIC_STREAM = 1
SHAPE_KINDS = ("rect", "disc", "bar")


def _shape_mask(kind: str, yy: np.ndarray, xx: np.ndarray, cy: float, cx: float,
                size: float, aspect: float) -> np.ndarray:
    if kind == "rect":
        return (np.abs(yy - cy) < size * aspect) & (np.abs(xx - cx) < size)
    if kind == "disc":
        return (yy - cy) ** 2 + ((xx - cx) * aspect) ** 2 < size ** 2
    # bar: a thin stripe through the center, horizontal or vertical
    if aspect >= 1.0:
        return np.abs(yy - cy) < size * 0.35
    return np.abs(xx - cx) < size * 0.35


def draw_image(rng: np.random.Generator, shape: Tuple[int, int, int], cls: int) -> np.ndarray:
    h, w, c = shape
    yy, xx = np.meshgrid(np.linspace(0.0, 1.0, h), np.linspace(0.0, 1.0, w), indexing="ij")

    angle = rng.uniform(0.0, 2.0 * np.pi)
    ramp = np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5)
    base = rng.uniform(0.15, 0.45, size=c)
    img = base[None, None, :] + 0.12 * ramp[:, :, None]

    n_shapes = int(rng.integers(2, 5))
    for s in range(n_shapes):
        kind = SHAPE_KINDS[(cls + s) % len(SHAPE_KINDS)]
        if s == 0:
            # first shape sits in the class's half of the frame
            half = (cls // len(SHAPE_KINDS)) % 2
            cy = rng.uniform(0.1, 0.45) + 0.45 * half
        else:
            cy = rng.uniform(0.1, 0.9)
        cx = rng.uniform(0.1, 0.9)
        size = rng.uniform(0.12, 0.3)
        aspect = rng.uniform(0.5, 1.5)
        mask = _shape_mask(kind, yy, xx, cy, cx, size, aspect)
        if rng.random() < 0.75:
            tone = rng.uniform(0.65, 1.0, size=c)
        else:
            tone = rng.uniform(0.0, 0.12, size=c)
        img[mask] = tone

    img = img + rng.normal(0.0, 0.03, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def generate_synthetic(count: int, shape: Tuple[int, int, int], num_classes: int, seed: int) -> PrivateDataset:
    """Balanced labelled private set: class of image i is i mod num_classes."""
    if num_classes < 1:
        raise ConfigError(f"num_classes must be >= 1, got {num_classes}")
    if count < num_classes:
        raise ConfigError(f"count ({count}) must be at least num_classes ({num_classes})")
    rng = np.random.default_rng([seed, PRIVATE_STREAM])
    classes = np.arange(count) % num_classes
    images = np.stack([draw_image(rng, shape, int(cls)) for cls in classes])
    labels = np.eye(num_classes, dtype=np.float64)[classes]
    return PrivateDataset(images, labels)


def generate_public_pool(count: int, shape: Tuple[int, int, int], seed: int) -> PublicPool:
    if count == 0:
        return PublicPool.empty(shape)
    rng = np.random.default_rng([seed, PUBLIC_STREAM])
    kinds = rng.integers(0, 2 * len(SHAPE_KINDS), size=count)
    return PublicPool(np.stack([draw_image(rng, shape, int(c)) for c in kinds]))
