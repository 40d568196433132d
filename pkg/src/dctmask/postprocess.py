"""Inference-side pipeline: thresholding, kernel components, NMS, decoding.

Candidates come from cells whose classification score clears tau_a; the
cells form kernel components (8-connected by default) and each candidate
remembers its component. Three suppression strategies are provided:

* segmented_nms: keep only the score-argmax box per kernel component,
  then standard box NMS on the survivors.
* standard_nms: plain greedy suppression.
* kernel_nms: NMS inside each component first, then globally.

Surviving vectors are decoded to masks, resized to their boxes, binarized
at tau_b and projected onto the full-image canvas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cv2
import numpy as np
from scipy import ndimage

from . import dct_codec
from .geometry import Box, Polygon


@dataclass
class PredictionGrids:
    """Per-cell network outputs on a stride-s grid.

    score_grid is (rows, cols); box_grid is (rows, cols, 4) holding
    (left, top, right, bottom) pixel distances; vector_grid is
    (rows, cols, n) mask coefficients.
    """

    stride: int
    score_grid: np.ndarray
    box_grid: np.ndarray
    vector_grid: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.score_grid, dtype=np.float32)
        b = np.asarray(self.box_grid, dtype=np.float32)
        v = np.asarray(self.vector_grid, dtype=np.float32)
        if s.ndim != 2:
            raise ValueError("score_grid must be 2-D")
        if b.shape != (*s.shape, 4):
            raise ValueError(f"box_grid shape {b.shape} != {(*s.shape, 4)}")
        if v.ndim != 3 or v.shape[:2] != s.shape:
            raise ValueError(f"vector_grid shape {v.shape} incompatible with {s.shape}")
        self.score_grid, self.box_grid, self.vector_grid = s, b, v

    @property
    def rows(self) -> int:
        return self.score_grid.shape[0]

    @property
    def cols(self) -> int:
        return self.score_grid.shape[1]

    @property
    def n(self) -> int:
        return self.vector_grid.shape[2]


@dataclass
class Detection:
    box: Box
    score: float
    vector: dct_codec.DctMaskVector
    source_cell: tuple[int, int]
    kernel_id: int


@dataclass
class FinalDetection:
    """Decoded instance: local binary mask pasted at origin on the canvas."""

    mask: np.ndarray
    origin: tuple[int, int]
    canvas_size: tuple[int, int]
    score: float
    contours: list[Polygon] = field(default_factory=list)

    def full_mask(self) -> np.ndarray:
        w, h = self.canvas_size
        out = np.zeros((h, w), dtype=np.uint8)
        x0, y0 = self.origin
        out[y0 : y0 + self.mask.shape[0], x0 : x0 + self.mask.shape[1]] = self.mask
        return out


def extract_candidates(
    grids: PredictionGrids,
    tau_a: float = 0.9,
    k: int = 64,
    connectivity: int = 8,
) -> tuple[list[Detection], np.ndarray]:
    """Threshold the score grid and label kernel components.

    Returns the candidate list and the (rows, cols) component-id grid
    (0 = background). Boxes are decoded from per-cell distances around the
    cell center scaled by the stride.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    positive = grids.score_grid >= tau_a
    structure = np.ones((3, 3), dtype=int) if connectivity == 8 else None
    labels, _ = ndimage.label(positive, structure=structure)
    dets: list[Detection] = []
    rr, cc = np.nonzero(positive)
    for r, c in zip(rr.tolist(), cc.tolist()):
        cx = (c + 0.5) * grids.stride
        cy = (r + 0.5) * grids.stride
        left, top, right, bottom = (float(x) for x in grids.box_grid[r, c])
        box = Box(cx - left, cy - top, cx + right, cy + bottom)
        vec = dct_codec.DctMaskVector(
            n=grids.n, k=k, coeffs=grids.vector_grid[r, c].astype(np.float64)
        )
        dets.append(
            Detection(
                box=box,
                score=float(grids.score_grid[r, c]),
                vector=vec,
                source_cell=(r, c),
                kernel_id=int(labels[r, c]),
            )
        )
    return dets, labels


def _box_array(dets: list[Detection]) -> np.ndarray:
    return np.array([[d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max] for d in dets])


def box_iou_matrix(boxes: np.ndarray) -> np.ndarray:
    """Pairwise IoU of (n, 4) boxes; 0/0 overlaps resolve to 0."""
    x0 = np.maximum(boxes[:, None, 0], boxes[None, :, 0])
    y0 = np.maximum(boxes[:, None, 1], boxes[None, :, 1])
    x1 = np.minimum(boxes[:, None, 2], boxes[None, :, 2])
    y1 = np.minimum(boxes[:, None, 3], boxes[None, :, 3])
    inter = np.clip(x1 - x0, 0, None) * np.clip(y1 - y0, 0, None)
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    union = areas[:, None] + areas[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        iou = np.where(union > 0, inter / union, 0.0)
    return iou


def _sort_order(dets: list[Detection]) -> list[int]:
    # score descending; ties broken by row-major source cell
    return sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].source_cell))


def _greedy_nms(dets: list[Detection], nms_iou: float) -> list[Detection]:
    if not dets:
        return []
    iou = box_iou_matrix(_box_array(dets))
    alive = np.ones(len(dets), dtype=bool)
    keep: list[Detection] = []
    for i in _sort_order(dets):
        if not alive[i]:
            continue
        keep.append(dets[i])
        alive &= iou[i] < nms_iou
        alive[i] = False
    return keep


def standard_nms(dets: list[Detection], nms_iou: float = 0.5) -> list[Detection]:
    """Greedy score-descending suppression at IoU >= nms_iou."""
    return _greedy_nms(dets, nms_iou)


def _grouped(dets: list[Detection]) -> dict[int, list[Detection]]:
    groups: dict[int, list[Detection]] = {}
    for d in dets:
        groups.setdefault(d.kernel_id, []).append(d)
    return groups


def segmented_nms(dets: list[Detection], nms_iou: float = 0.5) -> list[Detection]:
    """Keep one box per kernel component (score argmax), then box NMS."""
    survivors = []
    for _, group in sorted(_grouped(dets).items()):
        survivors.append(group[_sort_order(group)[0]])
    return _greedy_nms(survivors, nms_iou)


def kernel_nms(dets: list[Detection], nms_iou: float = 0.5) -> list[Detection]:
    """NMS inside each kernel component, then NMS across the survivors."""
    survivors: list[Detection] = []
    for _, group in sorted(_grouped(dets).items()):
        survivors.extend(_greedy_nms(group, nms_iou))
    return _greedy_nms(survivors, nms_iou)


s_nms = segmented_nms
k_nms = kernel_nms

# CLI names for the suppression variants
NMS_VARIANTS = {
    "s-nms": segmented_nms,
    "nms": standard_nms,
    "k-nms": kernel_nms,
}


def _pixel_window(lo: float, hi: float, limit: int) -> tuple[int, int] | None:
    """Indices of pixels whose centers lie inside [lo, hi], clamped to limit."""
    first = max(0, int(math.ceil(lo - 0.5)))
    last = min(limit - 1, int(math.floor(hi - 0.5)))
    if last < first:
        return None
    return first, last


def _trace_contours(mask: np.ndarray, origin: tuple[int, int]) -> list[Polygon]:
    found, _ = cv2.findContours(
        mask.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE
    )
    polys = []
    x0, y0 = origin
    for cont in found:
        pts = cont.reshape(-1, 2).astype(np.float64)
        if pts.shape[0] < 3:
            continue
        poly = Polygon(pts + np.array([x0, y0], dtype=np.float64))
        if poly.area > 0:
            polys.append(poly)
    return polys


def decode_detections(
    dets: list[Detection],
    canvas_w: int,
    canvas_h: int,
    tau_b: float = 0.35,
) -> tuple[list[FinalDetection], int]:
    """Decode mask vectors, project them into the image, trace contours.

    Detections whose binarized mask (or traced contour) is empty are
    dropped; the second return value counts them.
    """
    finals: list[FinalDetection] = []
    dropped = 0
    for det in dets:
        xw = _pixel_window(det.box.x_min, det.box.x_max, canvas_w)
        yw = _pixel_window(det.box.y_min, det.box.y_max, canvas_h)
        if xw is None or yw is None:
            dropped += 1
            continue
        w = xw[1] - xw[0] + 1
        h = yw[1] - yw[0] + 1
        grid = dct_codec.decode(det.vector).astype(np.float32)
        resized = cv2.resize(grid, (w, h), interpolation=cv2.INTER_LINEAR) if (w, h) != (
            grid.shape[1],
            grid.shape[0],
        ) else grid
        local = (resized >= tau_b).astype(np.uint8)
        if not local.any():
            dropped += 1
            continue
        contours = _trace_contours(local, (xw[0], yw[0]))
        if not contours:
            dropped += 1
            continue
        finals.append(
            FinalDetection(
                mask=local,
                origin=(xw[0], yw[0]),
                canvas_size=(canvas_w, canvas_h),
                score=det.score,
                contours=contours,
            )
        )
    return finals, dropped


def run_pipeline(
    grids: PredictionGrids,
    canvas_w: int,
    canvas_h: int,
    tau_a: float = 0.9,
    tau_b: float = 0.35,
    k: int = 64,
    nms_iou: float = 0.5,
    nms_variant: str = "s-nms",
    connectivity: int = 8,
) -> tuple[list[FinalDetection], dict]:
    """Full post-processing chain for one image; returns finals and counters."""
    if nms_variant not in NMS_VARIANTS:
        raise ValueError(f"unknown NMS variant {nms_variant!r}")
    candidates, labels = extract_candidates(grids, tau_a, k=k, connectivity=connectivity)
    kept = NMS_VARIANTS[nms_variant](candidates, nms_iou)
    finals, dropped = decode_detections(kept, canvas_w, canvas_h, tau_b)
    stats = {
        "candidates": len(candidates),
        "kernel_components": int(labels.max()),
        "after_nms": len(kept),
        "dropped_empty": dropped,
        "final": len(finals),
    }
    return finals, stats
