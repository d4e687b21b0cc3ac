"""
PPM (P6) / PGM (P5) export and import through Pillow.
"""

from pathlib import Path
from typing import List, Tuple

import numpy as np
from PIL import Image

from core.errors import ShapeError
from core.types import as_image


def to_bytes(pixels) -> np.ndarray:
    """Map [0, 1] reals to 0..255 with round-half-up after clamping."""
    arr = np.clip(as_image(pixels), 0.0, 1.0)
    return np.floor(255.0 * arr + 0.5).astype(np.uint8)


def save_image(pixels, path) -> Path:
    arr = to_bytes(pixels)
    channels = arr.shape[2]
    if channels == 1:
        img = Image.fromarray(np.ascontiguousarray(arr[:, :, 0]))
        suffix = ".pgm"
    elif channels == 3:
        img = Image.fromarray(arr)
        suffix = ".ppm"
    else:
        raise ShapeError(f"PPM/PGM export needs 1 or 3 channels, got {channels}")
    path = Path(path)
    if path.suffix.lower() not in (".pgm", ".ppm"):
        path = path.with_suffix(suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path, format="PPM")
    return path


def load_image(path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        arr = np.asarray(img, dtype=np.float64) / 255.0
    return as_image(arr)


def save_images(images: np.ndarray, directory, prefix: str = "img") -> List[Path]:
    directory = Path(directory)
    return [save_image(img, directory / f"{prefix}_{i:04d}") for i, img in enumerate(images)]


def load_image_dir(directory) -> Tuple[np.ndarray, List[str]]:
    """All .ppm/.pgm files in name order, stacked to (count, H, W, C)."""
    files = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in (".ppm", ".pgm"))
    if not files:
        raise ShapeError(f"no PPM/PGM images in {directory}")
    images = [load_image(p) for p in files]
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ShapeError(f"images in {directory} have mixed shapes: {sorted(shapes)}")
    return np.stack(images), [p.name for p in files]
