"""Label generation for a single-level, stride-s prediction grid.

Kernel sampling marks a grid cell positive when its center falls inside
the instance's shrunk kernel, so the number of positives scales with the
text area. The center-sampling variant (fixed window around the instance
centroid) is kept as the ablation baseline.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import dct_codec
from .geometry import (
    Box,
    DegeneratePolygonWarning,
    EmptyKernelError,
    Polygon,
    bounding_box,
    clip_to_box,
    shrink_polygon,
)


@dataclass
class TextInstance:
    polygon: Polygon
    ignore: bool = False
    raw_points: np.ndarray | None = None


@dataclass
class LabelGrid:
    """Per-cell training targets on a stride-s grid.

    box_target rows are (left, top, right, bottom) pixel distances from the
    cell center to the instance bounding box; vector_assignment holds the
    instance index (-1 for negatives) into vector_table.
    """

    stride: int
    rows: int
    cols: int
    kernel_target: np.ndarray
    ignore_mask: np.ndarray
    box_target: np.ndarray
    vector_assignment: np.ndarray
    vector_table: np.ndarray
    conflict_count: int = 0
    dropped_instances: int = 0
    k: int = 64
    n: int = 300

    @property
    def positive_count(self) -> int:
        return int(self.kernel_target.sum())

    def cell_centers(self) -> np.ndarray:
        """(rows*cols, 2) pixel coordinates of all cell centers."""
        cx = (np.arange(self.cols, dtype=np.float64) + 0.5) * self.stride
        cy = (np.arange(self.rows, dtype=np.float64) + 0.5) * self.stride
        gx, gy = np.meshgrid(cx, cy)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)


@dataclass
class _Claim:
    instance: int
    area: float
    cells: np.ndarray  # flat indices
    box: Box


def _grid_shape(image_w: int, image_h: int, stride: int) -> tuple[int, int]:
    if image_w <= 0 or image_h <= 0 or stride <= 0:
        raise ValueError("image size and stride must be positive")
    return math.ceil(image_h / stride), math.ceil(image_w / stride)


def _prepare(instances, image_w, image_h, stride, k, n):
    rows, cols = _grid_shape(image_w, image_h, stride)
    grid = LabelGrid(
        stride=stride,
        rows=rows,
        cols=cols,
        kernel_target=np.zeros((rows, cols), dtype=np.uint8),
        ignore_mask=np.zeros((rows, cols), dtype=bool),
        box_target=np.zeros((rows, cols, 4), dtype=np.float64),
        vector_assignment=np.full((rows, cols), -1, dtype=np.int32),
        vector_table=np.zeros((len(instances), n), dtype=np.float64),
        k=k,
        n=n,
    )
    return grid, grid.cell_centers()


def _clip_instance(inst: TextInstance, image_w: int, image_h: int) -> Polygon | None:
    if image_w <= 0 or image_h <= 0:
        return inst.polygon
    return clip_to_box(inst.polygon, Box(0.0, 0.0, float(image_w), float(image_h)))


def _resolve_claims(grid: LabelGrid, claims: list[_Claim], centers: np.ndarray) -> None:
    """Assign contested cells to the smallest-area claimant and count conflicts."""
    owner_area = np.full(grid.rows * grid.cols, np.inf)
    owner = np.full(grid.rows * grid.cols, -1, dtype=np.int64)
    claimed_by = np.zeros(grid.rows * grid.cols, dtype=np.int32)
    for ci, claim in enumerate(claims):
        claimed_by[claim.cells] += 1
        better = claim.area < owner_area[claim.cells]
        cells = claim.cells[better]
        owner_area[cells] = claim.area
        owner[cells] = ci
    grid.conflict_count = int((claimed_by > 1).sum())

    for ci, claim in enumerate(claims):
        cells = claim.cells[owner[claim.cells] == ci]
        if cells.size == 0:
            continue
        r = cells // grid.cols
        c = cells % grid.cols
        grid.kernel_target[r, c] = 1
        grid.vector_assignment[r, c] = claim.instance
        cx = centers[cells, 0]
        cy = centers[cells, 1]
        grid.box_target[r, c, 0] = cx - claim.box.x_min
        grid.box_target[r, c, 1] = cy - claim.box.y_min
        grid.box_target[r, c, 2] = claim.box.x_max - cx
        grid.box_target[r, c, 3] = claim.box.y_max - cy
    # positives carry real supervision even inside an ignore region
    grid.ignore_mask &= grid.kernel_target == 0


def _nearest_cell(grid: LabelGrid, x: float, y: float) -> int:
    r = min(max(int(y // grid.stride), 0), grid.rows - 1)
    c = min(max(int(x // grid.stride), 0), grid.cols - 1)
    return r * grid.cols + c


def _encode_instance(grid: LabelGrid, index: int, poly: Polygon) -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePolygonWarning)
        grid.vector_table[index] = dct_codec.encode(poly, grid.k, grid.n).coeffs


def generate_labels(
    instances: list[TextInstance],
    image_w: int,
    image_h: int,
    stride: int = 8,
    shrink_rate: float = 0.5,
    k: int = 64,
    n: int = 300,
    ensure_positive: bool = True,
) -> LabelGrid:
    """Kernel-sampling targets: positives are cells inside shrunk kernels.

    Ignore instances mask out their cells instead of contributing labels.
    When a kernel collapses or covers no cell center, the cell nearest the
    kernel centroid is promoted to positive (disable via ensure_positive).
    Cells claimed by several kernels go to the smallest-area kernel and are
    tallied in conflict_count.
    """
    grid, centers = _prepare(instances, image_w, image_h, stride, k, n)
    claims: list[_Claim] = []
    for j, inst in enumerate(instances):
        poly = _clip_instance(inst, image_w, image_h)
        if poly is None:
            grid.dropped_instances += 1
            continue
        if inst.ignore:
            inside = poly.contains_points(centers)
            grid.ignore_mask |= inside.reshape(grid.rows, grid.cols)
            continue
        _encode_instance(grid, j, poly)
        try:
            kernel = shrink_polygon(poly, shrink_rate)
        except EmptyKernelError:
            kernel = None
        if kernel is not None:
            cells = np.nonzero(kernel.contains_points(centers))[0]
            area = kernel.area
            anchor = kernel.centroid()
        else:
            cells = np.empty(0, dtype=np.int64)
            area = poly.area
            anchor = poly.centroid()
        if cells.size == 0:
            if not ensure_positive:
                grid.dropped_instances += 1
                continue
            cells = np.array([_nearest_cell(grid, anchor.x, anchor.y)], dtype=np.int64)
        claims.append(_Claim(instance=j, area=area, cells=cells, box=bounding_box(poly)))
    _resolve_claims(grid, claims, centers)
    return grid


def generate_labels_center_sampling(
    instances: list[TextInstance],
    image_w: int,
    image_h: int,
    stride: int = 8,
    radius_cells: int = 1,
    k: int = 64,
    n: int = 300,
) -> LabelGrid:
    """Ablation baseline: positives in a fixed window around the centroid cell."""
    if radius_cells < 0:
        raise ValueError("radius_cells must be >= 0")
    grid, centers = _prepare(instances, image_w, image_h, stride, k, n)
    claims: list[_Claim] = []
    for j, inst in enumerate(instances):
        poly = _clip_instance(inst, image_w, image_h)
        if poly is None:
            grid.dropped_instances += 1
            continue
        if inst.ignore:
            inside = poly.contains_points(centers)
            grid.ignore_mask |= inside.reshape(grid.rows, grid.cols)
            continue
        _encode_instance(grid, j, poly)
        center = poly.centroid()
        cr = min(max(int(center.y // stride), 0), grid.rows - 1)
        cc = min(max(int(center.x // stride), 0), grid.cols - 1)
        r0, r1 = max(0, cr - radius_cells), min(grid.rows - 1, cr + radius_cells)
        c0, c1 = max(0, cc - radius_cells), min(grid.cols - 1, cc + radius_cells)
        rr, cc2 = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")
        cells = (rr * grid.cols + cc2).ravel()
        claims.append(_Claim(instance=j, area=poly.area, cells=cells, box=bounding_box(poly)))
    _resolve_claims(grid, claims, centers)
    return grid
