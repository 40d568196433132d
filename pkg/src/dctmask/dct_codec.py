"""Compact frequency-domain codec for fixed-resolution text masks.

A k-by-k mask is transformed with the orthonormal 2D DCT-II, the
coefficient grid is read in zigzag order, and the first n entries form the
compact vector. Decoding zero-pads back to k*k, inverts the zigzag and
applies the inverse transform. The transform normalization is
(2/k) * C(u) * C(v) with C(0) = 1/sqrt(2) and C(w) = 1 otherwise, which
makes the basis orthonormal: energy is preserved exactly and truncation
error equals the energy of the dropped coefficients.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import (
    BinaryMask,
    DegeneratePolygonWarning,
    Polygon,
    bounding_box,
    rasterize_polygon,
)


@dataclass
class MaskCanonical:
    """k-by-k real mask grid with values in [0, 1]."""

    k: int
    grid: np.ndarray

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("resolution k must be positive")
        g = np.asarray(self.grid, dtype=np.float64)
        if g.shape != (self.k, self.k):
            raise ValueError(f"grid shape {g.shape} != ({self.k}, {self.k})")
        if g.min() < 0.0 or g.max() > 1.0:
            raise ValueError("canonical mask values must lie in [0, 1]")
        self.grid = g


@dataclass
class SpectrumMatrix:
    """k-by-k DCT coefficient grid of a canonical mask."""

    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != (self.k, self.k):
            raise ValueError(f"coeffs shape {c.shape} != ({self.k}, {self.k})")
        self.coeffs = c


@dataclass
class DctMaskVector:
    """First n zigzag coefficients of a k-by-k mask spectrum."""

    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64).ravel()
        if not (1 <= self.n <= self.k * self.k):
            raise ValueError(f"need 1 <= n <= k^2, got n={self.n}, k={self.k}")
        if c.shape[0] != self.n:
            raise ValueError(f"coeff count {c.shape[0]} != n={self.n}")
        self.coeffs = c


@functools.lru_cache(maxsize=16)
def _basis(k: int) -> np.ndarray:
    """Orthonormal DCT-II basis; row u is the u-th frequency atom."""
    x = np.arange(k, dtype=np.float64)
    u = np.arange(k, dtype=np.float64)[:, None]
    mat = np.cos((2.0 * x + 1.0) * u * np.pi / (2.0 * k)) * np.sqrt(2.0 / k)
    mat[0, :] /= np.sqrt(2.0)
    return mat


def _as_grid(mask) -> np.ndarray:
    if isinstance(mask, MaskCanonical):
        return mask.grid
    if isinstance(mask, BinaryMask):
        if mask.width != mask.height:
            raise ValueError("codec masks must be square")
        return mask.grid.astype(np.float64)
    g = np.asarray(mask, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square grid, got shape {g.shape}")
    return g


def dct2(mask) -> SpectrumMatrix:
    """Forward orthonormal 2D DCT of a square grid (separable evaluation)."""
    g = _as_grid(mask)
    k = g.shape[0]
    c = _basis(k)
    return SpectrumMatrix(k, c @ g @ c.T)


def idct2(spec) -> np.ndarray:
    """Inverse transform; returns the raw real grid without clamping."""
    s = spec.coeffs if isinstance(spec, SpectrumMatrix) else np.asarray(spec, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square spectrum, got shape {s.shape}")
    c = _basis(s.shape[0])
    return c.T @ s @ c


@functools.lru_cache(maxsize=16)
def _zigzag_flat(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat zigzag permutation and its inverse for a k-by-k grid."""
    order = np.empty(k * k, dtype=np.int64)
    pos = 0
    for d in range(2 * k - 1):
        lo = max(0, d - k + 1)
        hi = min(d, k - 1)
        rows = range(hi, lo - 1, -1) if d % 2 == 0 else range(lo, hi + 1)
        for u in rows:
            order[pos] = u * k + (d - u)
            pos += 1
    inverse = np.empty_like(order)
    inverse[order] = np.arange(k * k)
    return order, inverse


def zigzag_order(k: int) -> list[tuple[int, int]]:
    """Anti-diagonal scan order starting (0,0),(0,1),(1,0),(2,0),...

    Even diagonals run from high row index to low; the result is a
    bijection on the k-by-k index grid.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    flat, _ = _zigzag_flat(k)
    return [(int(f) // k, int(f) % k) for f in flat]


def canonical_mask(poly: Polygon, k: int) -> MaskCanonical:
    """Rasterize a polygon onto the k-by-k grid via its bounding box.

    The box maps affinely onto [0, k) x [0, k); no interpolation is
    involved so the canonical mask stays strictly binary.
    """
    box = bounding_box(poly)
    if box.width <= 0 or box.height <= 0:
        warnings.warn("degenerate bounding box, canonical mask is empty", DegeneratePolygonWarning)
        return MaskCanonical(k, np.zeros((k, k), dtype=np.float64))
    local = Polygon(
        (poly.vertices - np.array([box.x_min, box.y_min]))
        * np.array([k / box.width, k / box.height])
    )
    mask = rasterize_polygon(local, k, k)
    return MaskCanonical(k, mask.grid.astype(np.float64))


def encode(source, k: int, n: int) -> DctMaskVector:
    """Encode a mask (or a polygon, rasterized canonically) to n coefficients."""
    if isinstance(source, Polygon):
        grid = canonical_mask(source, k).grid
    else:
        grid = _as_grid(source)
        if grid.shape[0] != k:
            raise ValueError(f"mask resolution {grid.shape[0]} != k={k}")
    if not (1 <= n <= k * k):
        raise ValueError(f"need 1 <= n <= k^2, got n={n}, k={k}")
    if not grid.any():
        warnings.warn("empty mask encodes to the zero vector", DegeneratePolygonWarning)
        return DctMaskVector(n, k, np.zeros(n, dtype=np.float64))
    spec = dct2(grid)
    flat, _ = _zigzag_flat(k)
    return DctMaskVector(n, k, spec.coeffs.ravel()[flat[:n]].copy())


def decode(vec: DctMaskVector) -> np.ndarray:
    """Zero-pad to k^2, invert the zigzag, and apply the inverse transform."""
    k = vec.k
    padded = np.zeros(k * k, dtype=np.float64)
    padded[: vec.n] = vec.coeffs
    _, inverse = _zigzag_flat(k)
    spec = padded[inverse].reshape(k, k)
    return idct2(spec)


def binarize(grid: np.ndarray, threshold: float) -> np.ndarray:
    """Threshold a real grid to uint8 {0, 1} (values >= threshold are 1)."""
    return (np.asarray(grid) >= threshold).astype(np.uint8)


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def reconstruction_iou(poly: Polygon, k: int, n: int, threshold: float = 0.35) -> float:
    """Encode-decode a polygon mask and score it against the canonical truth.

    Both masks live on the k-by-k canonical grid, so n = k*k is exactly
    lossless. See reconstruction_iou_boxspace for the resize-back variant
    used by the published reconstruction-quality table.
    """
    gt = canonical_mask(poly, k).grid
    if not gt.any():
        return 0.0
    rec = binarize(decode(encode(MaskCanonical(k, gt), k, n)), threshold)
    return mask_iou(rec, gt)


def reconstruction_iou_boxspace(
    poly: Polygon,
    k: int,
    n: int,
    threshold: float = 0.35,
    gt_mask: np.ndarray | None = None,
) -> float:
    """Reconstruction quality measured at bounding-box resolution.

    Mirrors the full mask pipeline: rasterize at k-by-k, encode, decode,
    bilinear-resize back to the box pixel size, binarize, then IOU against
    the box-resolution rasterization of the polygon. This is the
    measurement behind the published resolution/dimension table; pass
    gt_mask to reuse the box raster across (k, n) settings.
    """
    import cv2

    box = bounding_box(poly)
    w = max(1, int(round(box.width)))
    h = max(1, int(round(box.height)))
    if gt_mask is None:
        local = Polygon(poly.vertices - np.array([box.x_min, box.y_min]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegeneratePolygonWarning)
            gt_mask = rasterize_polygon(local, w, h).grid
    if not gt_mask.any():
        return 0.0
    small = decode(encode(poly, k, n)).astype(np.float32)
    rec = cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR) >= threshold
    return mask_iou(rec, gt_mask)
