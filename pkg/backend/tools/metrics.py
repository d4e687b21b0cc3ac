"""
Image-quality metrics and recovered-to-original matching.

SSIM uses a uniform window (8x8 by default, capped at the image size) over
every valid position, stride 1, dynamic range 1, C1 = 0.01**2, C2 = 0.03**2
and sample (N - 1) normalization of variances and covariance. Channels are
averaged.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.errors import ShapeError
from core.flow import quantize_costs, solve_flow
from core.types import as_image

WINDOW = 8
C1 = 0.01 ** 2
C2 = 0.03 ** 2


def _stack(images) -> np.ndarray:
    arr = np.asarray(images, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[..., None]
    if arr.ndim != 4:
        raise ShapeError(f"expected a stack of images, got shape {arr.shape}")
    return arr


def _windows(stack: np.ndarray, window: int) -> np.ndarray:
    """(n, positions, pixels_per_window) for every valid window of every channel."""
    n, h, w, c = stack.shape
    wh, ww = min(window, h), min(window, w)
    views = sliding_window_view(stack, (wh, ww), axis=(1, 2))
    return views.reshape(n, -1, wh * ww)


def _window_stats(win: np.ndarray):
    npx = win.shape[-1]
    norm = npx / (npx - 1) if npx > 1 else 1.0
    mu = win.mean(axis=-1)
    var = ((win * win).mean(axis=-1) - mu * mu) * norm
    return mu, var, norm


def ssim_matrix(a_images, b_images, window: int = WINDOW) -> np.ndarray:
    """SSIM of every image in ``a_images`` against every image in ``b_images``."""
    a, b = _stack(a_images), _stack(b_images)
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(f"image shapes differ: {a.shape[1:]} vs {b.shape[1:]}")
    wa, wb = _windows(a, window), _windows(b, window)
    mu_a, var_a, norm = _window_stats(wa)
    mu_b, var_b, _ = _window_stats(wb)

    out = np.empty((len(a), len(b)), dtype=np.float64)
    for i in range(len(a)):
        cov = ((wb * wa[i]).mean(axis=-1) - mu_a[i] * mu_b) * norm
        num = (2.0 * mu_a[i] * mu_b + C1) * (2.0 * cov + C2)
        den = (mu_a[i] * mu_a[i] + mu_b * mu_b + C1) * (var_a[i] + var_b + C2)
        out[i] = (num / den).mean(axis=-1)
    return out


def ssim(a, b, window: int = WINDOW) -> float:
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return float(ssim_matrix(a[None], b[None], window)[0, 0])


def rmse(a, b) -> float:
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio for range-1 images; inf for identical inputs."""
    err = rmse(a, b)
    if err == 0.0:
        return float("inf")
    return float(-20.0 * np.log10(err))


@dataclass
class MetricReport:
    matching: np.ndarray
    ssim: np.ndarray
    psnr: np.ndarray
    rmse: np.ndarray
    total_ssim: float = field(init=False)

    def __post_init__(self):
        self.total_ssim = float(self.ssim.sum())

    @property
    def mean_ssim(self) -> float:
        return float(self.ssim.mean()) if len(self.ssim) else 0.0

    @property
    def mean_psnr(self) -> float:
        finite = self.psnr[np.isfinite(self.psnr)]
        return float(finite.mean()) if len(finite) else float("inf")

    @property
    def mean_rmse(self) -> float:
        return float(self.rmse.mean()) if len(self.rmse) else 0.0

    def rows(self) -> List[Dict[str, object]]:
        return [
            {
                "recovered": i,
                "original": int(self.matching[i]),
                "ssim": f"{self.ssim[i]:.6f}",
                "psnr": f"{self.psnr[i]:.4f}",
                "rmse": f"{self.rmse[i]:.6f}",
            }
            for i in range(len(self.matching))
        ]

    def summary(self) -> Dict[str, float]:
        return {"mean_ssim": self.mean_ssim, "mean_psnr": self.mean_psnr, "mean_rmse": self.mean_rmse}


def best_matching(scores: np.ndarray) -> np.ndarray:
    """
    Maximum-total-score perfect matching of rows to columns.

    Solved as a min-cost flow with quantized costs; returns ``perm`` with
    row i matched to column ``perm[i]``.
    """
    n = scores.shape[0]
    if scores.shape != (n, n):
        raise ShapeError(f"matching needs a square score matrix, got {scores.shape}")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    start = rows.ravel()
    end = n + cols.ravel()
    supplies = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n, dtype=np.int64)])
    sol = solve_flow(start, end, np.ones(n * n, dtype=np.int64), quantize_costs(scores.ravel()), supplies)
    used = sol.flows > 0
    perm = np.empty(n, dtype=np.int64)
    perm[start[used]] = end[used] - n
    return perm


def match_reconstructions(recovered, originals, window: int = WINDOW) -> MetricReport:
    rec, orig = _stack(recovered), _stack(originals)
    if len(rec) != len(orig):
        raise ShapeError(f"{len(rec)} recovered images vs {len(orig)} originals")
    scores = ssim_matrix(rec, orig, window)
    perm = best_matching(scores)
    idx = np.arange(len(rec))
    return MetricReport(
        matching=perm,
        ssim=scores[idx, perm],
        psnr=np.array([psnr(rec[i], orig[perm[i]]) for i in idx], dtype=np.float64),
        rmse=np.array([rmse(rec[i], orig[perm[i]]) for i in idx], dtype=np.float64),
    )
