"""Image complexity features: edge-pixel density and distinct-color ratio.

Edge detection is a self-contained Canny pass: luma grayscale, 5x5
Gaussian smoothing (sigma 1.4), Sobel gradients, non-maximum suppression
quantized to four directions, then double-threshold hysteresis at 50/150
on the 0..255 intensity scale. Borders are edge-replicated for every
convolution and the one-pixel frame is excluded from suppression output.
All parameters are module constants so alternate settings stay pinned in
one place.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import EmptyImage, ImageTooSmall

GRAY_WEIGHTS = (0.299, 0.587, 0.114)
GAUSSIAN_SIZE = 5
GAUSSIAN_SIGMA = 1.4
LOW_THRESHOLD = 50.0
HIGH_THRESHOLD = 150.0

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])


def load_rgb(path) -> np.ndarray:
    """Decode a PNG or JPEG file to an 8-bit RGB array of shape (h, w, 3)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    rgb = np.asarray(image, dtype=np.float64)
    r, g, b = GRAY_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def gaussian_kernel(size: int = GAUSSIAN_SIZE, sigma: float = GAUSSIAN_SIGMA) -> np.ndarray:
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    kernel = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def correlate2d(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Dense 2-D correlation with edge-replicated borders."""
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(image, ((ph, ph), (pw, pw)), mode="edge")
    h, w = image.shape
    out = np.zeros((h, w), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            out += kernel[i, j] * padded[i : i + h, j : j + w]
    return out


def _suppress_nonmaxima(mag: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Zero out pixels that are not local maxima along the gradient direction.

    The gradient angle (degrees mod 180) is quantized into four bins;
    a pixel survives when its magnitude is >= both neighbors along the
    quantized direction. The one-pixel border never survives.
    """
    h, w = mag.shape
    m = mag[1:-1, 1:-1]
    a = angle[1:-1, 1:-1]

    west, east = mag[1:-1, :-2], mag[1:-1, 2:]
    north, south = mag[:-2, 1:-1], mag[2:, 1:-1]
    nw, se = mag[:-2, :-2], mag[2:, 2:]
    ne, sw = mag[:-2, 2:], mag[2:, :-2]

    horizontal = (a < 22.5) | (a >= 157.5)
    diag_main = (a >= 22.5) & (a < 67.5)
    vertical = (a >= 67.5) & (a < 112.5)
    diag_anti = (a >= 112.5) & (a < 157.5)

    n1 = np.where(horizontal, west, 0.0)
    n2 = np.where(horizontal, east, 0.0)
    n1 = np.where(diag_main, nw, n1)
    n2 = np.where(diag_main, se, n2)
    n1 = np.where(vertical, north, n1)
    n2 = np.where(vertical, south, n2)
    n1 = np.where(diag_anti, ne, n1)
    n2 = np.where(diag_anti, sw, n2)

    keep = (m >= n1) & (m >= n2)
    out = np.zeros((h, w), dtype=np.float64)
    out[1:-1, 1:-1] = np.where(keep, m, 0.0)
    return out


def _dilate8(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[1:, 1:] |= mask[:-1, :-1]
    out[1:, :-1] |= mask[:-1, 1:]
    out[:-1, 1:] |= mask[1:, :-1]
    out[:-1, :-1] |= mask[1:, 1:]
    return out


def _hysteresis(mag: np.ndarray, low: float, high: float) -> np.ndarray:
    strong = mag >= high
    weak = (mag >= low) & ~strong
    edges = strong.copy()
    while True:
        grown = _dilate8(edges) & weak & ~edges
        if not grown.any():
            return edges
        edges |= grown


def canny_edges(image: np.ndarray) -> np.ndarray:
    """Boolean edge mask for an 8-bit RGB image."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an RGB array of shape (h, w, 3)")
    h, w = arr.shape[:2]
    if h < 3 or w < 3:
        raise ImageTooSmall(f"image is {w}x{h}; need at least 3x3")
    gray = to_grayscale(arr)
    smoothed = correlate2d(gray, gaussian_kernel())
    gx = correlate2d(smoothed, SOBEL_X)
    gy = correlate2d(smoothed, SOBEL_Y)
    mag = np.hypot(gx, gy)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    suppressed = _suppress_nonmaxima(mag, angle)
    return _hysteresis(suppressed, LOW_THRESHOLD, HIGH_THRESHOLD)


def edge_pixel_density(image: np.ndarray) -> float:
    """Fraction of pixels marked as edges, in [0, 1]."""
    mask = canny_edges(image)
    return float(mask.sum()) / mask.size


def color_diversity(image: np.ndarray) -> float:
    """Distinct RGB triples divided by total pixel count, in (0, 1]."""
    arr = np.asarray(image, dtype=np.uint32)
    if arr.size == 0:
        raise EmptyImage("image has no pixels")
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an RGB array of shape (h, w, 3)")
    packed = (arr[..., 0] << 16) | (arr[..., 1] << 8) | arr[..., 2]
    return float(np.unique(packed).size) / packed.size
