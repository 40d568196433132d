"""Toolkit for DCT-based compact text mask representation.

Covers the frequency-domain mask codec, kernel-based label generation,
segmented non-maximum suppression post-processing, reference losses, and
reconstruction/detection evaluation, plus a CLI that wires them together.
"""

from .dct_codec import (
    DctMaskVector,
    MaskCanonical,
    SpectrumMatrix,
    binarize,
    canonical_mask,
    dct2,
    decode,
    encode,
    idct2,
    mask_iou,
    reconstruction_iou,
    reconstruction_iou_boxspace,
    zigzag_order,
)
from .geometry import (
    BinaryMask,
    Box,
    DegeneratePolygonWarning,
    EmptyKernelError,
    Point,
    Polygon,
    bounding_box,
    polygon_iou,
    rasterize_polygon,
    shrink_polygon,
)
from .losses import LossBreakdown, dice_loss, giou_loss, mask_vector_loss, smooth_l1, total_loss
from .postprocess import (
    Detection,
    FinalDetection,
    PredictionGrids,
    decode_detections,
    extract_candidates,
    k_nms,
    kernel_nms,
    run_pipeline,
    s_nms,
    segmented_nms,
    standard_nms,
)
from .sampling import LabelGrid, TextInstance, generate_labels, generate_labels_center_sampling

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "Box",
    "DctMaskVector",
    "DegeneratePolygonWarning",
    "Detection",
    "EmptyKernelError",
    "FinalDetection",
    "LabelGrid",
    "LossBreakdown",
    "MaskCanonical",
    "Point",
    "Polygon",
    "PredictionGrids",
    "SpectrumMatrix",
    "TextInstance",
    "binarize",
    "bounding_box",
    "canonical_mask",
    "dct2",
    "decode",
    "decode_detections",
    "dice_loss",
    "encode",
    "extract_candidates",
    "generate_labels",
    "generate_labels_center_sampling",
    "giou_loss",
    "idct2",
    "k_nms",
    "kernel_nms",
    "mask_iou",
    "mask_vector_loss",
    "polygon_iou",
    "rasterize_polygon",
    "reconstruction_iou",
    "reconstruction_iou_boxspace",
    "run_pipeline",
    "s_nms",
    "segmented_nms",
    "shrink_polygon",
    "smooth_l1",
    "standard_nms",
    "total_loss",
    "zigzag_order",
]
