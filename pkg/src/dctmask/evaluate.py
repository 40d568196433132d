"""Detection evaluation: greedy IOU matching, P/R/F, challenging subset."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import Polygon, bounding_box, multi_polygon_iou
from .postprocess import FinalDetection
from .sampling import TextInstance

logger = logging.getLogger(__name__)

REPORT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8)


@dataclass
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ignored: int = 0

    def __iadd__(self, other: "MatchCounts") -> "MatchCounts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.ignored += other.ignored
        return self

    @property
    def precision(self) -> float:
        if self.tp + self.fp == 0:
            # no scoreable detections: perfect when nothing was expected
            return 1.0 if self.fn == 0 else 0.0
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        if self.tp + self.fn == 0:
            return 1.0
        return self.tp / (self.tp + self.fn)

    @property
    def f_measure(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class EvalReport:
    threshold: float
    counts: MatchCounts
    per_threshold: dict[float, MatchCounts] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.counts.precision

    @property
    def recall(self) -> float:
        return self.counts.recall

    @property
    def f_measure(self) -> float:
        return self.counts.f_measure

    def as_dict(self) -> dict:
        def row(c: MatchCounts) -> dict:
            return {
                "recall": c.recall,
                "precision": c.precision,
                "f_measure": c.f_measure,
                "tp": c.tp,
                "fp": c.fp,
                "fn": c.fn,
                "ignored": c.ignored,
            }

        return {
            "threshold": self.threshold,
            **row(self.counts),
            "per_threshold": {f"{t:.1f}": row(c) for t, c in sorted(self.per_threshold.items())},
        }


def _det_polygons(det) -> tuple[float, list[Polygon]]:
    if isinstance(det, FinalDetection):
        return det.score, det.contours
    score, polys = det
    if isinstance(polys, Polygon):
        polys = [polys]
    return float(score), list(polys)


def _boxes_overlap(polys: list[Polygon], gt: Polygon) -> bool:
    gb = bounding_box(gt)
    for p in polys:
        pb = bounding_box(p)
        if pb.x_min <= gb.x_max and gb.x_min <= pb.x_max and pb.y_min <= gb.y_max and gb.y_min <= pb.y_max:
            return True
    return False


def _iou_table(dets, gts: list[TextInstance]) -> np.ndarray:
    """Detections x ground-truth IOU matrix with bbox-reject shortcut."""
    table = np.zeros((len(dets), len(gts)))
    for i, det in enumerate(dets):
        _, polys = _det_polygons(det)
        if not polys:
            continue
        for j, gt in enumerate(gts):
            if not _boxes_overlap(polys, gt.polygon):
                continue
            table[i, j] = multi_polygon_iou(polys, [gt.polygon])
    return table


def _match_at(table: np.ndarray, order: list[int], gts: list[TextInstance], thr: float) -> MatchCounts:
    counts = MatchCounts()
    ignore = np.array([g.ignore for g in gts], dtype=bool)
    taken = np.zeros(len(gts), dtype=bool)
    for i in order:
        ious = table[i]
        cand = np.where(~ignore & ~taken & (ious >= thr))[0]
        if cand.size:
            best = cand[np.argmax(ious[cand])]
            taken[best] = True
            counts.tp += 1
            continue
        if ignore.any() and (ious[ignore] >= thr).any():
            counts.ignored += 1
            continue
        counts.fp += 1
    counts.fn = int((~ignore & ~taken).sum())
    return counts


def match_and_score(
    dets,
    gts: list[TextInstance],
    iou_thr: float = 0.5,
    extra_thresholds=REPORT_THRESHOLDS,
) -> EvalReport:
    """Greedy one-to-one matching of one image's detections against truth.

    Detections are FinalDetection objects or (score, polygons) pairs; they
    are reordered internally by descending score (ties keep input order).
    A detection matches the highest-IOU unmatched non-ignore instance at
    IOU >= iou_thr; failing that, overlap with an ignore instance excludes
    it from scoring; otherwise it is a false positive.
    """
    dets = list(dets)
    scores = [_det_polygons(d)[0] for d in dets]
    order = sorted(range(len(dets)), key=lambda i: (-scores[i], i))
    table = _iou_table(dets, gts)
    report = EvalReport(threshold=iou_thr, counts=_match_at(table, order, gts, iou_thr))
    for t in extra_thresholds:
        report.per_threshold[t] = _match_at(table, order, gts, t)
    return report


def aggregate_reports(reports: list[EvalReport], iou_thr: float = 0.5) -> EvalReport:
    """Corpus-level report: counts summed across per-image reports."""
    total = EvalReport(threshold=iou_thr, counts=MatchCounts())
    for rep in reports:
        total.counts += rep.counts
        for t, c in rep.per_threshold.items():
            total.per_threshold.setdefault(t, MatchCounts())
            total.per_threshold[t] += c
    return total


def is_challenging_instance(inst: TextInstance, image_w: int, image_h: int) -> bool:
    """Highly curved (mask area < half the box area) or extremely long
    (box edge > 3/4 of the image's longest edge)."""
    box = bounding_box(inst.polygon)
    if box.area > 0 and inst.polygon.area / box.area < 0.5:
        return True
    longest_image_edge = max(image_w, image_h)
    if longest_image_edge <= 0:
        return False
    return max(box.width, box.height) > 0.75 * longest_image_edge


def challenging_subset(records) -> list:
    """Images containing at least one challenging (non-ignore) instance."""
    kept = []
    unknown_size = 0
    for rec in records:
        if rec.width <= 0 or rec.height <= 0:
            unknown_size += 1
        if any(
            is_challenging_instance(inst, rec.width, rec.height)
            for inst in rec.instances
            if not inst.ignore
        ):
            kept.append(rec)
    if unknown_size:
        logger.warning(
            "%d records had unknown image size; only the area condition was applied", unknown_size
        )
    return kept
