"""Raster input, low-pass filtering, binarization and LoG edge detection."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import EmptyForeground, ImageTooSmall, InvalidThreshold, UnsupportedFormat

MIN_SIZE = 32
DEFAULT_THRESHOLD = 0.07
DEFAULT_RADIUS = 2
DEFAULT_SIGMA = 2.0
ZERO_CROSSING_FLOOR = 1e-8

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Grayscale raster, intensities in [0, 1], indexed ``pixels[y, x]``."""

    pixels: np.ndarray
    dpi: float = 100.0

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if px.shape[0] < MIN_SIZE or px.shape[1] < MIN_SIZE:
            raise ImageTooSmall(f"{px.shape[1]}x{px.shape[0]} is below {MIN_SIZE}x{MIN_SIZE}")
        if px.size and (px.min() < 0.0 or px.max() > 1.0 or not np.isfinite(px).all()):
            raise ValueError("intensities must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Boolean mask, True = hand (white), indexed ``bits[y, x]``."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool)
        if b.ndim != 2:
            raise ValueError("bits must be a 2-D array")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True, eq=False)
class EdgeMap:
    bits: np.ndarray
    response: np.ndarray | None = field(default=None, repr=False)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


def load_image(path) -> GrayImage:
    """Read an 8-bit grayscale BMP or binary PGM (P5, maxval 255)."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in ("BMP", "PPM"):
                raise UnsupportedFormat(f"{path.name}: format {fmt} is not BMP/PGM")
            if fmt == "PPM":
                with open(path, "rb") as fh:
                    if fh.read(2) != b"P5":
                        raise UnsupportedFormat(f"{path.name}: only binary PGM (P5) is accepted")
            if im.mode == "P":
                palette = np.asarray(im.getpalette()[: 3 * 256], dtype=np.int64).reshape(-1, 3)
                if not (palette[:, 0] == palette[:, 1]).all() or not (palette[:, 1] == palette[:, 2]).all():
                    raise UnsupportedFormat(f"{path.name}: palette is not grayscale")
                lut = palette[:, 0]
                idx = np.asarray(im, dtype=np.int64)
                raw = lut[idx]
            elif im.mode == "L":
                raw = np.asarray(im, dtype=np.int64)
            else:
                raise UnsupportedFormat(f"{path.name}: mode {im.mode} is not 8-bit grayscale")
            dpi = im.info.get("dpi", (100.0, 100.0))[0]
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path.name}: {exc}") from None
    return GrayImage(raw.astype(np.float64) / 255.0, dpi=float(dpi) or 100.0)


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_uint8(img: GrayImage | BinaryImage) -> np.ndarray:
    if isinstance(img, BinaryImage):
        return np.where(img.bits, 255, 0).astype(np.uint8)
    return np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)


def save_pgm(img: GrayImage | BinaryImage, path) -> None:
    """Write a P5 PGM; binary masks are written as 0/255."""
    arr = to_uint8(img)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    _atomic_write(Path(path), header + arr.tobytes())


def lowpass_filter(img: GrayImage, radius: int = DEFAULT_RADIUS) -> GrayImage:
    """Box average over a (2r+1)^2 window with edge replication."""
    if int(radius) != radius or radius < 1:
        raise ValueError("radius must be a positive integer")
    out = ndimage.uniform_filter(img.pixels, size=2 * int(radius) + 1, mode="nearest")
    # uniform_filter accumulates rounding error of order 1e-16
    out = np.clip(out, img.pixels.min(), img.pixels.max())
    return GrayImage(out, dpi=img.dpi)


def binarize(img: GrayImage, threshold: float = DEFAULT_THRESHOLD, invert: bool = False) -> BinaryImage:
    if not (0.0 < threshold < 1.0):
        raise InvalidThreshold(f"threshold {threshold} outside (0, 1)")
    px = 1.0 - img.pixels if invert else img.pixels
    return BinaryImage(px >= threshold)


def log_kernels(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """1-D Gaussian and zero-sum second-derivative kernels, half-width ceil(3 sigma)."""
    half = int(math.ceil(3.0 * sigma))
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    g /= g.sum()
    d2 = (x**2 / sigma**4 - 1.0 / sigma**2) * g
    d2 -= d2.mean()
    return g, d2


def log_response(bits: np.ndarray, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Laplacian-of-Gaussian of a 0/1 image, computed as Gxx*Gy + Gyy*Gx."""
    img = np.asarray(bits, dtype=np.float64)
    g, d2 = log_kernels(sigma)
    gxx = ndimage.correlate1d(ndimage.correlate1d(img, d2, axis=1, mode="nearest"), g, axis=0, mode="nearest")
    gyy = ndimage.correlate1d(ndimage.correlate1d(img, d2, axis=0, mode="nearest"), g, axis=1, mode="nearest")
    return gxx + gyy


def detect_edges(bin_img: BinaryImage, sigma: float = DEFAULT_SIGMA, floor: float = ZERO_CROSSING_FLOOR) -> EdgeMap:
    """Mark LoG zero crossings on the negative (bright) side of each sign change."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not bin_img.bits.any():
        raise EmptyForeground("binary image has no foreground pixels")
    r = log_response(bin_img.bits, sigma)
    neg = r < 0
    edges = np.zeros(r.shape, dtype=bool)
    for axis in (0, 1):
        a = [slice(None)] * 2
        b = [slice(None)] * 2
        a[axis] = slice(None, -1)
        b[axis] = slice(1, None)
        ra, rb = r[tuple(a)], r[tuple(b)]
        strong = np.abs(ra - rb) > floor
        cross_a = (ra < 0) & (rb > 0) & strong
        cross_b = (rb < 0) & (ra > 0) & strong
        edges[tuple(a)] |= cross_a
        edges[tuple(b)] |= cross_b
    edges &= neg
    # drop isolated responses so every edge pixel has an edge neighbour
    counts = ndimage.convolve(edges.astype(np.int32), _EIGHT.astype(np.int32), mode="constant")
    edges &= counts > 1
    return EdgeMap(edges, response=r)


def preprocess(img: GrayImage, radius: int = DEFAULT_RADIUS, threshold: float = DEFAULT_THRESHOLD,
               invert: bool = False) -> BinaryImage:
    """Filter then binarize, the first two blocks of the pipeline."""
    return binarize(lowpass_filter(img, radius), threshold, invert=invert)
