"""Fourier contour codec used as the comparison baseline for the mask codec.

The boundary is resampled uniformly by arc length into a complex signal
z_t = x_t + i*y_t, encoded as the 1/T-normalized discrete Fourier
coefficients at frequencies -m..m, and decoded by truncated synthesis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dct_codec
from .geometry import (
    DegeneratePolygonWarning,
    Polygon,
    bounding_box,
    rasterize_polygon,
)

# Dense resampling default; decoupled from the retained frequency count so
# that truncation genuinely discards boundary detail.
DEFAULT_CONTOUR_SAMPLES = 400


@dataclass
class ContourSignal:
    """Closed contour as T complex samples, uniform in arc length."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.complex128).ravel()
        if p.shape[0] < 4:
            raise ValueError(f"contour needs >= 4 samples, got {p.shape[0]}")
        self.points = p

    @property
    def t(self) -> int:
        return self.points.shape[0]

    def to_polygon(self) -> Polygon | None:
        """Vertex polygon of the samples; None when degenerate."""
        verts = np.stack([self.points.real, self.points.imag], axis=1)
        poly = Polygon(verts)
        if poly.area <= 1e-9:
            warnings.warn("contour samples form a degenerate polygon", DegeneratePolygonWarning)
            return None
        return poly


@dataclass
class FourierDescriptor:
    """Complex coefficients for frequencies 0, ±1, ..., ±m.

    coefficients[m + f] holds frequency f.
    """

    m: int
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128).ravel()
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if c.shape[0] != 2 * self.m + 1:
            raise ValueError(f"expected {2 * self.m + 1} coefficients, got {c.shape[0]}")
        self.coefficients = c


def resample_contour(poly: Polygon, t: int) -> ContourSignal:
    """t boundary points equally spaced by arc length.

    The walk starts at the vertex nearest the bounding box's top-left
    corner (ties broken by vertex index) so resampling is deterministic.
    """
    if t < 4:
        raise ValueError("need at least 4 samples")
    box = bounding_box(poly)
    v = poly.vertices
    dist2 = (v[:, 0] - box.x_min) ** 2 + (v[:, 1] - box.y_min) ** 2
    start = int(np.argmin(dist2))
    ring = np.roll(v, -start, axis=0)
    ring = np.vstack([ring, ring[:1]])
    seg = np.hypot(np.diff(ring[:, 0]), np.diff(ring[:, 1]))
    perimeter = float(seg.sum())
    if perimeter <= 0:
        raise ValueError("zero-perimeter polygon cannot be resampled")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    at = np.arange(t, dtype=np.float64) * perimeter / t
    xs = np.interp(at, cum, ring[:, 0])
    ys = np.interp(at, cum, ring[:, 1])
    return ContourSignal(xs + 1j * ys)


def dft_encode(sig: ContourSignal, m: int) -> FourierDescriptor:
    """1/T-normalized DFT coefficients at frequencies -m..m."""
    t = sig.t
    if 2 * m + 1 > t:
        raise ValueError(f"2m+1 = {2 * m + 1} exceeds sample count {t}")
    spectrum = np.fft.fft(sig.points) / t
    freqs = np.arange(-m, m + 1)
    return FourierDescriptor(m, spectrum[freqs % t])


def dft_decode(desc: FourierDescriptor, t: int) -> ContourSignal:
    """Truncated Fourier synthesis at t sample positions."""
    if t < 4:
        raise ValueError("need at least 4 samples")
    j = np.arange(t, dtype=np.float64)
    freqs = np.arange(-desc.m, desc.m + 1, dtype=np.float64)
    phases = np.exp(2j * np.pi * np.outer(j, freqs) / t)
    return ContourSignal(phases @ desc.coefficients)


def budget_matched_m(n: int) -> int:
    """Largest m with 2*(2m+1) real values not exceeding n."""
    m = (n // 2 - 1) // 2
    return max(0, m)


@dataclass
class CodecRow:
    image_id: str
    instance: int
    mask_codec_iou: float
    contour_codec_iou: float
    box_baseline_iou: float


@dataclass
class CodecReport:
    k: int
    n: int
    m: int
    samples: int
    threshold: float
    rows: list[CodecRow]

    def mean(self, attr: str) -> float:
        if not self.rows:
            return 0.0
        return float(np.mean([getattr(r, attr) for r in self.rows]))

    def fraction_at(self, attr: str, iou_thr: float) -> float:
        """Share of instances whose reconstruction clears iou_thr."""
        if not self.rows:
            return 0.0
        vals = np.array([getattr(r, attr) for r in self.rows])
        return float((vals >= iou_thr).mean())


def _contour_codec_iou(poly: Polygon, gt_grid: np.ndarray, k: int, m: int, samples: int) -> float:
    sig = resample_contour(poly, samples)
    rec = dft_decode(dft_encode(sig, m), samples)
    rec_poly = rec.to_polygon()
    if rec_poly is None:
        return 0.0
    box = bounding_box(poly)
    if box.width <= 0 or box.height <= 0:
        return 0.0
    local = Polygon(
        (rec_poly.vertices - np.array([box.x_min, box.y_min]))
        * np.array([k / box.width, k / box.height])
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePolygonWarning)
        rec_mask = rasterize_polygon(local, k, k).grid
    return dct_codec.mask_iou(rec_mask, gt_grid)


def codec_compare(
    records,
    k: int = 64,
    n: int = 300,
    m: int | None = None,
    samples: int = DEFAULT_CONTOUR_SAMPLES,
    threshold: float = 0.35,
) -> CodecReport:
    """Per-instance reconstruction IOU for both codecs at matched budget.

    The mask codec spends n real coefficients; the contour codec retains m
    frequency pairs, 2*(2m+1) real values, with m derived from n unless
    given. Both are scored on the k-by-k canonical grid of each instance.
    Caller filters the corpus (e.g. to the challenging subset) beforehand.
    """
    records = list(records)
    if not records:
        raise ValueError("empty corpus")
    if m is None:
        m = budget_matched_m(n)
    if 2 * m + 1 > samples:
        raise ValueError(f"sample count {samples} too small for m={m}")
    rows: list[CodecRow] = []
    for rec in records:
        for idx, inst in enumerate(rec.instances):
            if inst.ignore:
                continue
            gt = dct_codec.canonical_mask(inst.polygon, k).grid
            if not gt.any():
                continue
            box_iou = float(gt.sum() / gt.size)
            rows.append(
                CodecRow(
                    image_id=rec.image_id,
                    instance=idx,
                    mask_codec_iou=dct_codec.reconstruction_iou(inst.polygon, k, n, threshold),
                    contour_codec_iou=_contour_codec_iou(inst.polygon, gt, k, m, samples),
                    box_baseline_iou=box_iou,
                )
            )
    return CodecReport(k=k, n=n, m=m, samples=samples, threshold=threshold, rows=rows)
