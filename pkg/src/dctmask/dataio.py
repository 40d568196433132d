"""Corpus ingestion, interchange formats, and the synthetic shape generator.

File formats owned by this module (all little-endian, documented in the
repository README):

* canonical corpus: JSON lines, one image per line:
  {"schema_version": 1, "image_id": str, "width": int, "height": int,
   "instances": [{"points": [[x, y], ...], "ignore": bool}]}
  Coordinates are rounded to 1e-3 px, which makes save/load a fixed point.

* prediction grid dump: binary, magic b"PGRD", then five uint32 fields
  (version=1, stride, rows, cols, n) followed by float32 planes in
  row-major order: score (rows*cols), box (rows*cols*4), vector
  (rows*cols*n).

* mask stacks: magic b"MSKB" (uint8 payload) or b"MSKF" (float32 payload),
  then three uint32 fields (version=1, count, k) and count*k*k values.

* detections: JSON lines, one image per line:
  {"image_id": str, "detections": [{"score": float,
   "polygons": [[[x, y], ...], ...]}]}
"""

from __future__ import annotations

import io
import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Box, Polygon, clip_to_box
from .postprocess import FinalDetection, PredictionGrids
from .sampling import TextInstance

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GRID_MAGIC = b"PGRD"
MASK_MAGIC_BINARY = b"MSKB"
MASK_MAGIC_FLOAT = b"MSKF"


@dataclass
class CorpusRecord:
    image_id: str
    width: int
    height: int
    instances: list[TextInstance] = field(default_factory=list)


def _make_instance(points: np.ndarray, ignore: bool, width: int, height: int) -> TextInstance | None:
    """Build an instance, clipping to image bounds; None when rejected."""
    try:
        poly = Polygon(points)
    except ValueError as exc:
        logger.warning("rejected polygon: %s", exc)
        return None
    if not poly.is_simple():
        logger.warning("rejected self-intersecting or zero-area polygon")
        return None
    raw = poly.vertices.copy()
    if width > 0 and height > 0:
        clipped = clip_to_box(poly, Box(0.0, 0.0, float(width), float(height)))
        if clipped is None:
            logger.warning("rejected polygon fully outside image bounds")
            return None
        poly = clipped
    return TextInstance(polygon=poly, ignore=ignore, raw_points=raw)


def _numeric_prefix(tokens: list[str]) -> tuple[list[float], list[str]]:
    nums: list[float] = []
    for i, tok in enumerate(tokens):
        try:
            nums.append(float(tok))
        except ValueError:
            return nums, tokens[i:]
    return nums, []


def _parse_ctw_line(line: str) -> tuple[np.ndarray | None, bool, str]:
    """Returns (points, ignore, layout) for one annotation line.

    Layouts auto-detected by numeric token count: 28 numbers are absolute
    x,y pairs; 32 numbers are a bounding box followed by 28 offsets.
    """
    tokens = [t.strip() for t in line.strip().split(",") if t.strip() != ""]
    if not tokens:
        return None, False, "empty"
    nums, rest = _numeric_prefix(tokens)
    transcription = ",".join(rest)
    if transcription.startswith("####"):
        transcription = transcription[4:]
    ignore = transcription == "###"
    if len(nums) == 28:
        pts = np.array(nums, dtype=np.float64).reshape(14, 2)
        return pts, ignore, "absolute"
    if len(nums) == 32:
        x_min, y_min = nums[0], nums[1]
        off = np.array(nums[4:], dtype=np.float64).reshape(14, 2)
        return off + np.array([x_min, y_min]), ignore, "bbox-offset"
    return None, ignore, "malformed"


def load_ctw1500(
    path: str | Path,
    sizes: dict[str, tuple[int, int]] | None = None,
    images_dir: str | Path | None = None,
) -> list[CorpusRecord]:
    """Load a directory of per-image 14-point annotation files.

    Image sizes are unknown to the annotation files; pass `sizes` (image_id
    -> (w, h)) or `images_dir` to recover them, otherwise records carry
    width = height = 0 and polygons are kept unclipped.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"annotation directory not found: {root}")
    records = []
    for file in sorted(root.iterdir()):
        if file.suffix.lower() != ".txt":
            continue
        image_id = file.stem
        width, height = (sizes or {}).get(image_id, (0, 0))
        if width == 0 and images_dir is not None:
            width, height = _probe_image_size(Path(images_dir), image_id)
        instances = []
        skipped = 0
        layouts: dict[str, int] = {}
        for line in file.read_text().splitlines():
            if not line.strip():
                continue
            pts, ignore, layout = _parse_ctw_line(line)
            layouts[layout] = layouts.get(layout, 0) + 1
            if pts is None:
                skipped += 1
                continue
            inst = _make_instance(pts, ignore, width, height)
            if inst is None:
                skipped += 1
                continue
            instances.append(inst)
        if skipped:
            logger.warning("%s: skipped %d malformed or invalid lines", file.name, skipped)
        if layouts:
            logger.debug("%s: line layouts %s", file.name, layouts)
        records.append(CorpusRecord(image_id, width, height, instances))
    return records


def _probe_image_size(images_dir: Path, image_id: str) -> tuple[int, int]:
    from PIL import Image

    for ext in (".jpg", ".jpeg", ".png"):
        candidate = images_dir / f"{image_id}{ext}"
        if candidate.exists():
            with Image.open(candidate) as img:
                return img.size
    return 0, 0


def load_totaltext(
    path: str | Path,
    sizes: dict[str, tuple[int, int]] | None = None,
    images_dir: str | Path | None = None,
) -> list[CorpusRecord]:
    """Load polygon files with variable vertex counts.

    Each line is x1,y1,...,xn,yn[,transcription]; the transcription "#"
    marks a DO-NOT-CARE region mapped to the ignore flag.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"annotation directory not found: {root}")
    records = []
    for file in sorted(root.iterdir()):
        if file.suffix.lower() != ".txt":
            continue
        image_id = file.stem
        width, height = (sizes or {}).get(image_id, (0, 0))
        if width == 0 and images_dir is not None:
            width, height = _probe_image_size(Path(images_dir), image_id)
        instances = []
        skipped = 0
        for line in file.read_text().splitlines():
            if not line.strip():
                continue
            tokens = [t.strip() for t in line.strip().split(",") if t.strip() != ""]
            nums, rest = _numeric_prefix(tokens)
            if len(nums) < 6 or len(nums) % 2 != 0:
                skipped += 1
                continue
            ignore = ",".join(rest) == "#"
            pts = np.array(nums, dtype=np.float64).reshape(-1, 2)
            inst = _make_instance(pts, ignore, width, height)
            if inst is None:
                skipped += 1
                continue
            instances.append(inst)
        if skipped:
            logger.warning("%s: skipped %d malformed or invalid lines", file.name, skipped)
        records.append(CorpusRecord(image_id, width, height, instances))
    return records


def _round3(value: float) -> float:
    return round(float(value), 3)


def save_canonical(records: list[CorpusRecord], path: str | Path) -> None:
    Path(path).write_bytes(corpus_to_jsonl_bytes(records))


def load_canonical(path: str | Path) -> list[CorpusRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            version = obj.get("schema_version")
            if version != SCHEMA_VERSION:
                raise ValueError(f"line {lineno}: unsupported schema version {version!r}")
            width = int(obj["width"])
            height = int(obj["height"])
            instances = []
            for inst in obj["instances"]:
                made = _make_instance(
                    np.asarray(inst["points"], dtype=np.float64),
                    bool(inst.get("ignore", False)),
                    width,
                    height,
                )
                if made is not None:
                    instances.append(made)
            records.append(CorpusRecord(str(obj["image_id"]), width, height, instances))
    return records


def save_detections(path: str | Path, per_image: dict[str, list[FinalDetection]]) -> None:
    with open(path, "w") as fh:
        for image_id in sorted(per_image):
            dets = [
                {
                    "score": float(det.score),
                    "polygons": [
                        [[_round3(x), _round3(y)] for x, y in poly.vertices]
                        for poly in det.contours
                    ],
                }
                for det in per_image[image_id]
            ]
            fh.write(json.dumps({"image_id": image_id, "detections": dets}, sort_keys=True) + "\n")


def load_detections(path: str | Path) -> dict[str, list[tuple[float, list[Polygon]]]]:
    out: dict[str, list[tuple[float, list[Polygon]]]] = {}
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            dets = []
            for d in obj["detections"]:
                polys = [Polygon(p) for p in d["polygons"] if len(p) >= 3]
                dets.append((float(d["score"]), polys))
            out[str(obj["image_id"])] = dets
    return out


def write_prediction_dump(path: str | Path, grids: PredictionGrids) -> None:
    header = GRID_MAGIC + struct.pack(
        "<5I", 1, grids.stride, grids.rows, grids.cols, grids.n
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(grids.score_grid.astype("<f4").tobytes())
        fh.write(grids.box_grid.astype("<f4").tobytes())
        fh.write(grids.vector_grid.astype("<f4").tobytes())


def read_prediction_dump(path: str | Path) -> PredictionGrids:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != GRID_MAGIC:
            raise ValueError(f"not a prediction dump (magic {magic!r})")
        version, stride, rows, cols, n = struct.unpack("<5I", fh.read(20))
        if version != 1:
            raise ValueError(f"unsupported dump version {version}")
        payload = fh.read()
    expected = rows * cols * (1 + 4 + n) * 4
    if len(payload) != expected:
        raise ValueError(f"dump payload is {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f4")
    score = data[: rows * cols].reshape(rows, cols)
    box = data[rows * cols : rows * cols * 5].reshape(rows, cols, 4)
    vector = data[rows * cols * 5 :].reshape(rows, cols, n)
    return PredictionGrids(stride=stride, score_grid=score, box_grid=box, vector_grid=vector)


def write_mask_stack(path: str | Path, masks: np.ndarray) -> None:
    m = np.asarray(masks)
    if m.ndim != 3 or m.shape[1] != m.shape[2]:
        raise ValueError(f"expected (count, k, k) mask stack, got {m.shape}")
    if m.dtype == np.uint8 or m.dtype == bool:
        magic, payload = MASK_MAGIC_BINARY, m.astype(np.uint8).tobytes()
    else:
        magic, payload = MASK_MAGIC_FLOAT, m.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(magic + struct.pack("<3I", 1, m.shape[0], m.shape[1]))
        fh.write(payload)


def read_mask_stack(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic not in (MASK_MAGIC_BINARY, MASK_MAGIC_FLOAT):
            raise ValueError(f"not a mask stack (magic {magic!r})")
        version, count, k = struct.unpack("<3I", fh.read(12))
        if version != 1:
            raise ValueError(f"unsupported mask stack version {version}")
        payload = fh.read()
    if magic == MASK_MAGIC_BINARY:
        data = np.frombuffer(payload, dtype=np.uint8)
    else:
        data = np.frombuffer(payload, dtype="<f4")
    if data.size != count * k * k:
        raise ValueError(f"mask payload has {data.size} values, expected {count * k * k}")
    return data.reshape(count, k, k).copy()


def grids_from_labels(grid) -> PredictionGrids:
    """Prediction grids replaying ground-truth labels (score 1 at positives).

    Used to exercise the post-processing pipeline without a trained model.
    """
    rows, cols = grid.kernel_target.shape
    vector = np.zeros((rows, cols, grid.n), dtype=np.float32)
    rr, cc = np.nonzero(grid.kernel_target)
    if rr.size:
        vector[rr, cc] = grid.vector_table[grid.vector_assignment[rr, cc]]
    return PredictionGrids(
        stride=grid.stride,
        score_grid=grid.kernel_target.astype(np.float32),
        box_grid=grid.box_target.astype(np.float32),
        vector_grid=vector,
    )


# ---------------------------------------------------------------------------
# synthetic curved-text shapes

CURVATURE_CLASSES = ("straight", "wavy", "arc", "crescent")


@dataclass
class SyntheticShapeSpec:
    curvature: str
    length: float
    half_width: float
    amplitude: float = 0.0
    cycles: float = 1.0
    phase: float = 0.0
    sweep: float = 0.0
    rotation: float = 0.0
    vertex_count: int = 14


def _band_vertices(spec: SyntheticShapeSpec) -> np.ndarray:
    half = spec.vertex_count // 2
    t = np.linspace(0.0, 1.0, half)
    if spec.curvature in ("straight", "wavy"):
        x = t * spec.length
        y = spec.amplitude * np.sin(2 * np.pi * spec.cycles * t + spec.phase)
        dx = np.gradient(x)
        dy = np.gradient(y)
        norm = np.hypot(dx, dy)
        nx, ny = -dy / norm, dx / norm
        top = np.stack([x + spec.half_width * nx, y + spec.half_width * ny], axis=1)
        bot = np.stack([x - spec.half_width * nx, y - spec.half_width * ny], axis=1)
    else:
        radius = spec.length / spec.sweep
        theta = spec.sweep * t - spec.sweep / 2.0
        outer = radius + spec.half_width
        inner = radius - spec.half_width
        top = np.stack([outer * np.cos(theta), outer * np.sin(theta)], axis=1)
        bot = np.stack([inner * np.cos(theta), inner * np.sin(theta)], axis=1)
    ring = np.vstack([top, bot[::-1]])
    rot = np.array(
        [
            [math.cos(spec.rotation), -math.sin(spec.rotation)],
            [math.sin(spec.rotation), math.cos(spec.rotation)],
        ]
    )
    return ring @ rot.T


def _fit_to_slot(vertices: np.ndarray, slot: Box, rng: np.random.Generator) -> np.ndarray:
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    extent = np.maximum(hi - lo, 1e-9)
    margin = 24.0
    avail = np.array([slot.width - 2 * margin, slot.height - 2 * margin])
    scale = float((avail / extent).min()) * rng.uniform(0.55, 0.95)
    scaled = (vertices - (lo + hi) / 2.0) * scale
    lo2 = scaled.min(axis=0)
    hi2 = scaled.max(axis=0)
    slack_x = slot.width - 2 * margin - (hi2[0] - lo2[0])
    slack_y = slot.height - 2 * margin - (hi2[1] - lo2[1])
    offset = np.array(
        [
            slot.x_min + margin - lo2[0] + rng.uniform(0, max(slack_x, 0)),
            slot.y_min + margin - lo2[1] + rng.uniform(0, max(slack_y, 0)),
        ]
    )
    return scaled + offset


def _sample_spec(rng: np.random.Generator, curvature: str) -> SyntheticShapeSpec:
    if curvature in ("straight", "wavy"):
        aspect = rng.uniform(1.5, 20.0)
        length = 1.0
        half_width = length / (2.0 * aspect)
        amplitude = 0.0 if curvature == "straight" else rng.uniform(0.05, 0.16) * length
        return SyntheticShapeSpec(
            curvature=curvature,
            length=length,
            half_width=half_width,
            amplitude=amplitude,
            cycles=rng.uniform(0.5, 1.5),
            phase=rng.uniform(0, 2 * np.pi),
            rotation=rng.uniform(0, np.pi),
        )
    sweep = rng.uniform(math.pi * 0.75, 1.35 * math.pi) if curvature == "arc" else rng.uniform(
        1.45 * math.pi, 1.7 * math.pi
    )
    radius = 1.0
    length = radius * sweep
    half_width = radius * rng.uniform(0.18, 0.4)
    return SyntheticShapeSpec(
        curvature=curvature,
        length=length,
        half_width=half_width,
        sweep=sweep,
        rotation=rng.uniform(0, 2 * np.pi),
    )


def make_shape(
    rng: np.random.Generator,
    slot: Box,
    curvature: str | None = None,
    max_retries: int = 10,
) -> Polygon:
    """One simple band polygon fitted inside the slot box."""
    for _ in range(max_retries):
        cls = curvature or str(rng.choice(CURVATURE_CLASSES))
        spec = _sample_spec(rng, cls)
        verts = _fit_to_slot(_band_vertices(spec), slot, rng)
        poly = Polygon(np.round(verts, 3))
        if poly.is_simple():
            return poly
    raise RuntimeError("failed to generate a simple polygon within retry budget")


def generate_synthetic_corpus(
    seed: int,
    count: int,
    image_size: tuple[int, int] = (640, 640),
    instances_per_image: tuple[int, int] = (1, 3),
    curvature: str | None = None,
) -> list[CorpusRecord]:
    """Deterministic corpus of curved-text band shapes.

    Instances occupy disjoint horizontal slots so kernels of different
    instances never touch on a stride-8 grid.
    """
    rng = np.random.default_rng(seed)
    width, height = image_size
    records = []
    for i in range(count):
        lo, hi = instances_per_image
        n_inst = int(rng.integers(lo, hi + 1))
        slot_h = height / n_inst
        instances = []
        for s in range(n_inst):
            slot = Box(0.0, s * slot_h, float(width), (s + 1) * slot_h)
            poly = make_shape(rng, slot, curvature)
            instances.append(TextInstance(polygon=poly))
        records.append(CorpusRecord(f"synthetic_{i:05d}", width, height, instances))
    return records


def corpus_to_jsonl_bytes(records: list[CorpusRecord]) -> bytes:
    buf = io.StringIO()
    for rec in records:
        buf.write(
            json.dumps(
                {
                    "schema_version": SCHEMA_VERSION,
                    "image_id": rec.image_id,
                    "width": rec.width,
                    "height": rec.height,
                    "instances": [
                        {
                            "points": [[_round3(x), _round3(y)] for x, y in inst.polygon.vertices],
                            "ignore": bool(inst.ignore),
                        }
                        for inst in rec.instances
                    ],
                },
                sort_keys=True,
            )
            + "\n"
        )
    return buf.getvalue().encode()
