"""Structural similarity (SSIM) for self-transfer evaluation.

Standard windowed formulation: 11x11 Gaussian window with sigma 1.5,
K1 = 0.01, K2 = 0.03, dynamic range 1.0, biased (weighted-moment)
covariances, and "valid" windowing only -- no border padding, so every
window is fully interior and the result needs no padding convention to
reproduce externally.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .render import RasterImage


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise DataError("window must be odd and >= 1")
        if min(self.sigma, self.k1, self.k2, self.dynamic_range) <= 0:
            raise DataError("SSIM constants must be positive")


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """Normalized 2D Gaussian kernel (size, size)."""
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _to_gray(img: RasterImage) -> np.ndarray:
    pixels = img.pixels
    if pixels.ndim == 2:
        return pixels.astype(np.float64)
    if pixels.shape[2] == 1:
        return pixels[:, :, 0].astype(np.float64)
    return pixels.mean(axis=2)


def _windowed_mean(gray: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    size = kernel.shape[0]
    windows = np.lib.stride_tricks.sliding_window_view(gray, (size, size))
    return np.einsum("hwij,ij->hw", windows, kernel)


def ssim(a: RasterImage, b: RasterImage, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean SSIM index over all valid (fully interior) windows; in [-1, 1].

    Multichannel images are reduced to grayscale by the channel mean first.
    Raises DataError when shapes differ or the image is smaller than the
    window.
    """
    if a.pixels.shape != b.pixels.shape:
        raise DataError(f"shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    x = _to_gray(a)
    y = _to_gray(b)
    if x.shape[0] < cfg.window or x.shape[1] < cfg.window:
        raise DataError(f"image {x.shape} smaller than the {cfg.window}x{cfg.window} window")

    kernel = gaussian_window(cfg.window, cfg.sigma)
    mu_x = _windowed_mean(x, kernel)
    mu_y = _windowed_mean(y, kernel)
    xx = _windowed_mean(x * x, kernel)
    yy = _windowed_mean(y * y, kernel)
    xy = _windowed_mean(x * y, kernel)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y

    c1 = (cfg.k1 * cfg.dynamic_range) ** 2
    c2 = (cfg.k2 * cfg.dynamic_range) ** 2
    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(ssim_map.mean())


def pixel_l1(a: RasterImage, b: RasterImage) -> float:
    """Mean absolute per-value difference; auxiliary to SSIM in reports."""
    if a.pixels.shape != b.pixels.shape:
        raise DataError(f"shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    return float(np.abs(a.pixels - b.pixels).mean())
