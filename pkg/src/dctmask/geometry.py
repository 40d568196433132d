"""Polygon primitives: rasterization, shrinking, IOU and bounding boxes.

Everything in this module is a pure function over immutable inputs. All
coordinates are image-pixel coordinates (x right, y down); a grid cell
(row i, col j) is considered foreground when its center (j + 0.5, i + 0.5)
lies inside the polygon under the even-odd rule.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import shapely.geometry as sgeom


class DegeneratePolygonWarning(UserWarning):
    """Emitted when a zero-area polygon produces an empty mask or vector."""


class EmptyKernelError(ValueError):
    """The inward offset collapsed the polygon to nothing."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float


class Polygon:
    """Closed polygon given by an ordered vertex list (last connects to first).

    Vertices are stored as an (n, 2) float64 array and never mutated.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices: Sequence | np.ndarray):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"expected (n, 2) vertex array, got shape {v.shape}")
        if v.shape[0] < 3:
            raise ValueError(f"polygon needs at least 3 vertices, got {v.shape[0]}")
        if not np.isfinite(v).all():
            raise ValueError("polygon vertices must be finite")
        self.vertices = v
        self.vertices.setflags(write=False)

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def __repr__(self) -> str:
        return f"Polygon({self.vertices.tolist()!r})"

    def signed_area(self) -> float:
        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def area(self) -> float:
        return abs(self.signed_area())

    @property
    def perimeter(self) -> float:
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    def normalized(self) -> "Polygon":
        """Copy with positive (counter-clockwise) vertex orientation."""
        if self.signed_area() < 0:
            return Polygon(self.vertices[::-1])
        return Polygon(self.vertices)

    def centroid(self) -> Point:
        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        xn = np.roll(x, -1)
        yn = np.roll(y, -1)
        cross = x * yn - xn * y
        a = cross.sum() / 2.0
        if abs(a) < 1e-12:
            return Point(float(x.mean()), float(y.mean()))
        cx = float(((x + xn) * cross).sum() / (6.0 * a))
        cy = float(((y + yn) * cross).sum() / (6.0 * a))
        return Point(cx, cy)

    def is_simple(self) -> bool:
        """True when the boundary does not self-intersect and area > 0."""
        if self.area <= 0:
            return False
        return sgeom.Polygon(self.vertices).is_valid

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """Even-odd containment test for an (m, 2) array of points.

        Points exactly on an edge resolve by the half-open crossing rule
        (strict comparisons), which is deterministic across platforms.
        """
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        px = pts[:, 0]
        py = pts[:, 1]
        inside = np.zeros(px.shape[0], dtype=bool)
        v = self.vertices
        x0, y0 = v[:, 0], v[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        for i in range(v.shape[0]):
            crosses = (y0[i] > py) != (y1[i] > py)
            if not crosses.any():
                continue
            xs = (x1[i] - x0[i]) * (py - y0[i]) / (y1[i] - y0[i]) + x0[i]
            inside ^= crosses & (px < xs)
        return inside[0] if single else inside

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self.vertices + np.array([dx, dy]))

    def scaled(self, sx: float, sy: float) -> "Polygon":
        return Polygon(self.vertices * np.array([sx, sy]))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, min corner inclusive of extent."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted box {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_polygon(self) -> Polygon:
        return Polygon(
            [
                (self.x_min, self.y_min),
                (self.x_max, self.y_min),
                (self.x_max, self.y_max),
                (self.x_min, self.y_max),
            ]
        )


@dataclass
class BinaryMask:
    """Strictly binary raster grid of shape (height, width)."""

    width: int
    height: int
    grid: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("mask dimensions must be positive")
        g = np.asarray(self.grid)
        if g.shape != (self.height, self.width):
            raise ValueError(f"grid shape {g.shape} != ({self.height}, {self.width})")
        self.grid = (g != 0).astype(np.uint8)

    def foreground(self) -> int:
        return int(self.grid.sum())

    def iou(self, other: "BinaryMask") -> float:
        if self.grid.shape != other.grid.shape:
            raise ValueError("mask shapes differ")
        a = self.grid.astype(bool)
        b = other.grid.astype(bool)
        union = np.logical_or(a, b).sum()
        if union == 0:
            return 0.0
        return float(np.logical_and(a, b).sum() / union)


def rasterize_polygon(poly: Polygon, width: int, height: int) -> BinaryMask:
    """Rasterize with the pixel-center even-odd rule.

    A degenerate (zero-area) polygon yields an all-zero mask and a
    DegeneratePolygonWarning.
    """
    if width <= 0 or height <= 0:
        raise ValueError("raster dimensions must be positive")
    if poly.area <= 0:
        warnings.warn("zero-area polygon rasterized to empty mask", DegeneratePolygonWarning)
        return BinaryMask(width, height, np.zeros((height, width), dtype=np.uint8))
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    inside = poly.contains_points(pts).reshape(height, width)
    return BinaryMask(width, height, inside.astype(np.uint8))


def shrink_polygon(poly: Polygon, rate: float) -> Polygon:
    """Inward offset by d = area * (1 - rate^2) / perimeter.

    The offset uses edge-parallel translation with miter joins;
    self-intersections of the raw offset are clipped away and the largest
    surviving piece is returned. A collapsed result raises EmptyKernelError.
    """
    if not (0.0 < rate <= 1.0):
        raise ValueError(f"shrink rate must be in (0, 1], got {rate}")
    p = poly.normalized()
    if p.area <= 0:
        raise EmptyKernelError("cannot shrink a zero-area polygon")
    if rate == 1.0:
        return p
    d = p.area * (1.0 - rate * rate) / p.perimeter
    shr = sgeom.Polygon(p.vertices).buffer(-d, join_style="mitre")
    if shr.is_empty:
        raise EmptyKernelError(f"offset {d:.3f} collapsed the polygon")
    if shr.geom_type == "MultiPolygon":
        shr = max(shr.geoms, key=lambda g: g.area)
    coords = np.asarray(shr.exterior.coords)[:-1]
    if coords.shape[0] < 3 or abs(shr.area) <= 0:
        raise EmptyKernelError(f"offset {d:.3f} collapsed the polygon")
    return Polygon(coords).normalized()


def bounding_box(poly: Polygon) -> Box:
    v = poly.vertices
    return Box(
        float(v[:, 0].min()),
        float(v[:, 1].min()),
        float(v[:, 0].max()),
        float(v[:, 1].max()),
    )


# Longest raster side used by the polygon IOU oracle; keeps the
# discretization error well under the 0.5 matching threshold.
IOU_RASTER_SIDE = 1024


def _window_rasters(
    group_a: Iterable[Polygon], group_b: Iterable[Polygon], side: int
) -> tuple[np.ndarray, np.ndarray] | None:
    """Rasterize two polygon groups onto a shared window, longer side `side`."""
    group_a = [p for p in group_a if p.area > 0]
    group_b = [p for p in group_b if p.area > 0]
    if not group_a and not group_b:
        return None
    allv = np.concatenate([p.vertices for p in group_a + group_b], axis=0)
    x0, y0 = allv.min(axis=0)
    x1, y1 = allv.max(axis=0)
    w = max(x1 - x0, 1e-9)
    h = max(y1 - y0, 1e-9)
    scale = side / max(w, h)
    cols = max(1, int(math.ceil(w * scale)))
    rows = max(1, int(math.ceil(h * scale)))

    def raster(group: list[Polygon]) -> np.ndarray:
        out = np.zeros((rows, cols), dtype=bool)
        for p in group:
            local = Polygon((p.vertices - np.array([x0, y0])) * scale)
            out |= rasterize_polygon(local, cols, rows).grid.astype(bool)
        return out

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePolygonWarning)
        return raster(group_a), raster(group_b)


def multi_polygon_iou(
    group_a: Iterable[Polygon], group_b: Iterable[Polygon], side: int = IOU_RASTER_SIDE
) -> float:
    """IOU between unions of polygons, by shared-window rasterization."""
    rasters = _window_rasters(group_a, group_b, side)
    if rasters is None:
        return 0.0
    ra, rb = rasters
    union = np.logical_or(ra, rb).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(ra, rb).sum() / union)


def polygon_iou(a: Polygon, b: Polygon) -> float:
    """|a ∩ b| / |a ∪ b| measured on a 1024-cell raster window."""
    return multi_polygon_iou([a], [b])


def clip_to_box(poly: Polygon, box: Box) -> Polygon | None:
    """Sutherland-Hodgman clip against an axis-aligned box.

    Returns None when the clipped region is empty or degenerate.
    """
    pts = [tuple(v) for v in poly.vertices]
    planes = [
        lambda p: p[0] >= box.x_min,
        lambda p: p[0] <= box.x_max,
        lambda p: p[1] >= box.y_min,
        lambda p: p[1] <= box.y_max,
    ]
    axes = [(0, box.x_min), (0, box.x_max), (1, box.y_min), (1, box.y_max)]
    for keep, (axis, level) in zip(planes, axes):
        if not pts:
            break
        out = []
        for i, cur in enumerate(pts):
            prev = pts[i - 1]
            cur_in = keep(cur)
            prev_in = keep(prev)
            if cur_in != prev_in:
                t = (level - prev[axis]) / (cur[axis] - prev[axis])
                inter = (
                    prev[0] + t * (cur[0] - prev[0]),
                    prev[1] + t * (cur[1] - prev[1]),
                )
                out.append(inter)
            if cur_in:
                out.append(cur)
        pts = out
    if len(pts) < 3:
        return None
    clipped = Polygon(pts)
    if clipped.area <= 1e-9:
        return None
    return clipped
