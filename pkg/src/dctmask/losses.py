"""Reference value functions for the training objective.

Gradient-free: external trainers differentiate these formulas in their
own framework; this module pins down the exact values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import Box


class EmptyOverlapWarning(UserWarning):
    """Both operands of an overlap ratio were empty; 0/0 resolved to 0."""


@dataclass(frozen=True)
class LossBreakdown:
    l_cls: float
    l_box: float
    l_mask: float
    lambda_box: float
    lambda_mask: float

    @property
    def total(self) -> float:
        return self.l_cls + self.lambda_box * self.l_box + self.lambda_mask * self.l_mask


def dice_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    """1 - 2*sum(pred*gt) / (sum(pred) + sum(gt)); empty/empty gives 0."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    denom = pred.sum() + gt.sum()
    if denom == 0:
        warnings.warn("dice loss of two empty grids defined as 0", EmptyOverlapWarning)
        return 0.0
    return float(1.0 - 2.0 * (pred * gt).sum() / denom)


def giou_loss(a: Box, b: Box) -> float:
    """1 - IoU + |C - (A ∪ B)| / |C| with C the smallest enclosing box."""
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    union = a.area + b.area - inter
    if union > 0:
        iou = inter / union
    else:
        warnings.warn("IoU of zero-area boxes defined as 0", EmptyOverlapWarning)
        iou = 0.0
    c = Box(
        min(a.x_min, b.x_min),
        min(a.y_min, b.y_min),
        max(a.x_max, b.x_max),
        max(a.y_max, b.y_max),
    )
    penalty = (c.area - union) / c.area if c.area > 0 else 0.0
    return float(1.0 - iou + penalty)


def smooth_l1(x, beta: float = 1.0):
    """0.5*x^2 for |x| < beta, |x| - beta/2 otherwise.

    Continuous and once-differentiable at |x| = beta.
    """
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.where(x < beta, 0.5 * x * x, x - 0.5 * beta)
    return float(out) if out.ndim == 0 else out


def mask_vector_loss(pred, gt, is_text: bool = True, beta: float = 1.0) -> float:
    """Summed smooth-L1 over coefficient differences, gated by the text flag."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    gt = np.asarray(gt, dtype=np.float64).ravel()
    if pred.shape != gt.shape:
        raise ValueError(f"dimension mismatch {pred.shape[0]} vs {gt.shape[0]}")
    if not is_text:
        return 0.0
    return float(smooth_l1(pred - gt, beta).sum())


def total_loss(
    l_cls: float,
    l_box: float,
    l_mask: float,
    lambda_box: float = 1.0,
    lambda_mask: float = 1.0,
) -> LossBreakdown:
    return LossBreakdown(
        l_cls=float(l_cls),
        l_box=float(l_box),
        l_mask=float(l_mask),
        lambda_box=float(lambda_box),
        lambda_mask=float(lambda_mask),
    )
