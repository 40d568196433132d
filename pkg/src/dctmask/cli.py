"""Command-line experiments over the library modules.

Every command is deterministic for a fixed config and seed; reports are
dual-emitted as a human table on stdout and JSON via --out. Diagnostics
and timing go to stderr so JSON outputs stay byte-identical across runs.
"""

from __future__ import annotations

import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import click
import numpy as np

from . import contour_codec, dataio, dct_codec, evaluate, postprocess, sampling
from .geometry import (
    DegeneratePolygonWarning,
    Polygon,
    bounding_box,
    rasterize_polygon,
)


@dataclass
class RunConfig:
    k: int = 64
    n: int = 300
    tau_a: float = 0.9
    tau_b: float = 0.35
    shrink_rate: float = 0.5
    stride: int = 8
    nms_iou: float = 0.5
    nms_variant: str = "s-nms"
    seed: int = 0
    jobs: int = 1

    @classmethod
    def resolve(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        """File values first, then explicit flags win."""
        values = {}
        if config_path:
            loaded = json.loads(Path(config_path).read_text())
            known = {f.name for f in fields(cls)}
            unknown = set(loaded) - known
            if unknown:
                raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
            values.update(loaded)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="JSON config file; explicit flags override it."),
        click.option("--k", type=int, default=None, help="Mask resolution."),
        click.option("--n", type=int, default=None, help="Coefficient vector length."),
        click.option("--tau-a", type=float, default=None, help="Positive-score threshold."),
        click.option("--tau-b", type=float, default=None, help="Mask binarization threshold."),
        click.option("--shrink-rate", type=float, default=None, help="Kernel shrink rate."),
        click.option("--stride", type=int, default=None, help="Prediction grid stride."),
        click.option("--nms", "nms_variant", type=click.Choice(sorted(postprocess.NMS_VARIANTS)),
                     default=None, help="Suppression variant."),
        click.option("--nms-iou", type=float, default=None, help="NMS IoU threshold."),
        click.option("--jobs", type=int, default=None, help="Per-image worker processes."),
        click.option("--seed", type=int, default=None, help="RNG seed."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _pop_config(params: dict) -> RunConfig:
    config_path = params.pop("config_path")
    names = {f.name for f in fields(RunConfig)}
    overrides = {k: params.pop(k) for k in list(params) if k in names}
    return RunConfig.resolve(config_path, overrides)


def _emit_json(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _table(headers: list[str], rows: list[list]) -> str:
    cells = [headers] + [[str(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for idx, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _load_corpus(path: str) -> list[dataio.CorpusRecord]:
    try:
        records = dataio.load_canonical(path)
    except (OSError, ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot load corpus {path}: {exc}")
    if not records:
        raise click.ClickException(f"corpus {path} is empty")
    return records


@click.group()
def cli():
    """Compact DCT text-mask codec, label generation and post-processing."""


@cli.command()
@click.option("--seed", type=int, default=0)
@click.option("--count", type=int, default=20, help="Number of images.")
@click.option("--image-size", default="640x640", help="Canvas WxH.")
@click.option("--curvature", type=click.Choice(dataio.CURVATURE_CLASSES), default=None,
              help="Pin all shapes to one curvature class.")
@click.option("--out", required=True, type=click.Path())
def synth(seed, count, image_size, curvature, out):
    """Generate a deterministic synthetic curved-text corpus."""
    try:
        w, h = (int(v) for v in image_size.lower().split("x"))
    except ValueError:
        raise click.ClickException(f"bad --image-size {image_size!r}, want WxH")
    records = dataio.generate_synthetic_corpus(seed, count, (w, h), curvature=curvature)
    dataio.save_canonical(records, out)
    click.echo(f"wrote {len(records)} records to {out}", err=True)


@cli.command()
@click.option("--corpus", type=click.Path(exists=True), default=None,
              help="Canonical corpus; every instance polygon is encoded.")
@click.option("--masks", type=click.Path(exists=True), default=None,
              help="Mask stack (MSKB/MSKF) to encode directly.")
@click.option("--k", type=int, default=64)
@click.option("--n", type=int, default=300)
@click.option("--out", required=True, type=click.Path())
def encode(corpus, masks, k, n, out):
    """Encode polygon or mask inputs to coefficient-vector JSON lines."""
    if (corpus is None) == (masks is None):
        raise click.ClickException("provide exactly one of --corpus or --masks")
    lines = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePolygonWarning)
        if corpus:
            for rec in _load_corpus(corpus):
                for idx, inst in enumerate(rec.instances):
                    vec = dct_codec.encode(inst.polygon, k, n)
                    lines.append(
                        {"image_id": rec.image_id, "instance": idx, "k": k, "n": n,
                         "coeffs": vec.coeffs.tolist()}
                    )
        else:
            stack = dataio.read_mask_stack(masks)
            if stack.shape[1] != k:
                raise click.ClickException(
                    f"mask stack resolution {stack.shape[1]} != --k {k}"
                )
            for idx in range(stack.shape[0]):
                vec = dct_codec.encode(stack[idx].astype(np.float64), k, n)
                lines.append({"index": idx, "k": k, "n": n, "coeffs": vec.coeffs.tolist()})
    with open(out, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    click.echo(f"encoded {len(lines)} vectors to {out}", err=True)


@cli.command()
@click.option("--vectors", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--binarize", "do_binarize", is_flag=True, default=False,
              help="Write binary masks thresholded at --tau-b instead of float grids.")
@click.option("--tau-b", type=float, default=0.35)
def decode(vectors, out, do_binarize, tau_b):
    """Decode coefficient-vector JSON lines back to a mask stack."""
    grids = []
    k = None
    with open(vectors) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if k is None:
                k = int(obj["k"])
            elif int(obj["k"]) != k:
                raise click.ClickException(f"line {lineno}: mixed resolutions in vector file")
            vec = dct_codec.DctMaskVector(n=int(obj["n"]), k=k, coeffs=np.asarray(obj["coeffs"]))
            grids.append(dct_codec.decode(vec))
    if not grids:
        raise click.ClickException("vector file is empty")
    stack = np.stack(grids)
    if do_binarize:
        stack = (stack >= tau_b).astype(np.uint8)
    else:
        stack = stack.astype(np.float32)
    dataio.write_mask_stack(out, stack)
    click.echo(f"decoded {len(grids)} masks to {out}", err=True)


def _roundtrip_image(args) -> list[list[tuple[float, float, float]]]:
    """Per instance, per (k, n) pair: box-space IOU at tau_b and at 0.5,
    plus the canonical-grid IOU at tau_b. The box raster is shared."""
    rec, pair_grid, tau_b = args
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePolygonWarning)
        for inst in rec.instances:
            if inst.ignore:
                continue
            box = bounding_box(inst.polygon)
            w = max(1, int(round(box.width)))
            h = max(1, int(round(box.height)))
            local = Polygon(inst.polygon.vertices - np.array([box.x_min, box.y_min]))
            gt = rasterize_polygon(local, w, h).grid
            rows = []
            for k, n in pair_grid:
                rows.append(
                    (
                        dct_codec.reconstruction_iou_boxspace(inst.polygon, k, n, tau_b, gt),
                        dct_codec.reconstruction_iou_boxspace(inst.polygon, k, n, 0.5, gt),
                        dct_codec.reconstruction_iou(inst.polygon, k, n, tau_b),
                    )
                )
            out.append(rows)
    return out


@cli.command("roundtrip-eval")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--pairs", default="32:300,64:100,64:300,64:500,128:300",
              help="Comma-separated k:n resolution/dimension pairs.")
@click.option("--out", type=click.Path(), default=None)
@_config_options
def roundtrip_eval(corpus, pairs, out, **params):
    """Mean encode-decode reconstruction IOU per (k, n) pair.

    The primary column measures at bounding-box resolution (decode,
    resize back to the box, binarize), matching how reconstruction
    quality is scored in the reference results; the canonical column
    skips the resize and is exactly lossless at n = k^2.
    """
    cfg = _pop_config(params)
    try:
        pair_grid = [tuple(int(v) for v in pair.split(":")) for pair in pairs.split(",")]
    except ValueError:
        raise click.ClickException(f"bad --pairs {pairs!r}, want k:n[,k:n...]")
    records = _load_corpus(corpus)
    tasks = [(rec, pair_grid, cfg.tau_b) for rec in records]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_roundtrip_image, tasks))
    else:
        results = [_roundtrip_image(t) for t in tasks]
    per_instance = [rows for chunk in results for rows in chunk]
    report = {"rows": [], "corpus": str(corpus), "instances": len(per_instance)}
    for idx, (k, n) in enumerate(pair_grid):
        arr = np.array([inst[idx] for inst in per_instance]) if per_instance else np.zeros((0, 3))
        mean = lambda col: round(float(arr[:, col].mean() * 100), 2) if len(arr) else 0.0
        report["rows"].append(
            {
                "k": k,
                "n": n,
                "mean_iou": mean(0),
                "mean_iou_at_0.5": mean(1),
                "mean_iou_canonical": mean(2),
            }
        )
    click.echo(
        _table(
            ["Resolution", "Dim", f"IOU(tau_b={cfg.tau_b})", "IOU(0.5)", "IOU(canonical)"],
            [[f"{r['k']}x{r['k']}", r["n"], r["mean_iou"], r["mean_iou_at_0.5"],
              r["mean_iou_canonical"]] for r in report["rows"]],
        )
    )
    _emit_json(report, out)


@cli.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--center-sampling", is_flag=True, default=False,
              help="Use the centroid-window baseline instead of kernel sampling.")
@click.option("--radius", type=int, default=1, help="Center-sampling radius in cells.")
@_config_options
def labels(corpus, out, center_sampling, radius, **params):
    """Generate per-image training label grids as JSON lines."""
    cfg = _pop_config(params)
    records = _load_corpus(corpus)
    count = 0
    with open(out, "w") as fh:
        for rec in records:
            if center_sampling:
                grid = sampling.generate_labels_center_sampling(
                    rec.instances, rec.width, rec.height,
                    stride=cfg.stride, radius_cells=radius, k=cfg.k, n=cfg.n,
                )
            else:
                grid = sampling.generate_labels(
                    rec.instances, rec.width, rec.height,
                    stride=cfg.stride, shrink_rate=cfg.shrink_rate, k=cfg.k, n=cfg.n,
                )
            rr, cc = np.nonzero(grid.kernel_target)
            obj = {
                "image_id": rec.image_id,
                "stride": grid.stride,
                "rows": grid.rows,
                "cols": grid.cols,
                "k": grid.k,
                "n": grid.n,
                "conflicts": grid.conflict_count,
                "positives": [
                    {
                        "cell": [int(r), int(c)],
                        "box": [round(float(v), 3) for v in grid.box_target[r, c]],
                        "instance": int(grid.vector_assignment[r, c]),
                    }
                    for r, c in zip(rr, cc)
                ],
                "ignore_cells": [
                    [int(r), int(c)] for r, c in zip(*np.nonzero(grid.ignore_mask))
                ],
                "vector_table": [[float(v) for v in row] for row in grid.vector_table],
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
            count += 1
    click.echo(f"wrote labels for {count} images to {out}", err=True)


def _detect_image(args):
    path_str, cfg = args
    grids = dataio.read_prediction_dump(path_str)
    start = time.perf_counter()
    finals, stats = postprocess.run_pipeline(
        grids,
        canvas_w=grids.cols * grids.stride,
        canvas_h=grids.rows * grids.stride,
        tau_a=cfg.tau_a,
        tau_b=cfg.tau_b,
        k=cfg.k,
        nms_iou=cfg.nms_iou,
        nms_variant=cfg.nms_variant,
    )
    elapsed = time.perf_counter() - start
    return Path(path_str).stem, finals, stats, elapsed


@cli.command("detect-post")
@click.option("--dumps", required=True, type=click.Path(exists=True),
              help="Prediction dump file, or a directory of one dump per image.")
@click.option("--out", required=True, type=click.Path())
@click.option("--timing-out", type=click.Path(), default=None)
@_config_options
def detect_post(dumps, out, timing_out, **params):
    """Run thresholding, NMS and mask decoding over prediction dumps."""
    cfg = _pop_config(params)
    root = Path(dumps)
    paths = sorted(p for p in root.iterdir() if p.is_file()) if root.is_dir() else [root]
    if not paths:
        raise click.ClickException(f"no dump files under {dumps}")
    tasks = [(str(p), cfg) for p in paths]
    try:
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                results = list(pool.map(_detect_image, tasks))
        else:
            results = [_detect_image(t) for t in tasks]
    except ValueError as exc:
        raise click.ClickException(str(exc))
    results.sort(key=lambda r: r[0])
    dataio.save_detections(out, {image_id: finals for image_id, finals, _, _ in results})
    timing = {
        "per_image": {image_id: round(t, 6) for image_id, _, _, t in results},
        "total": round(sum(t for *_, t in results), 6),
    }
    for image_id, _, stats, t in results:
        click.echo(f"{image_id}: {stats} ({t * 1000:.1f} ms)", err=True)
    if timing_out:
        Path(timing_out).write_text(json.dumps(timing, sort_keys=True, indent=2) + "\n")
    click.echo(f"wrote detections for {len(results)} images to {out}", err=True)


@cli.command("eval")
@click.option("--dets", required=True, type=click.Path(exists=True))
@click.option("--gt", required=True, type=click.Path(exists=True))
@click.option("--iou", type=float, default=0.5)
@click.option("--out", type=click.Path(), default=None)
def eval_cmd(dets, gt, iou, out):
    """Score a detections file against ground truth at IOU thresholds."""
    records = _load_corpus(gt)
    try:
        per_image = dataio.load_detections(dets)
    except (OSError, ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot load detections {dets}: {exc}")
    reports = [
        evaluate.match_and_score(per_image.get(rec.image_id, []), rec.instances, iou)
        for rec in records
    ]
    total = evaluate.aggregate_reports(reports, iou)
    result = total.as_dict()
    rows = [[f"{iou:.2f}", f"{total.recall * 100:.1f}", f"{total.precision * 100:.1f}",
             f"{total.f_measure * 100:.1f}"]]
    for thr, counts in sorted(total.per_threshold.items()):
        rows.append([f"{thr:.2f}", f"{counts.recall * 100:.1f}",
                     f"{counts.precision * 100:.1f}", f"{counts.f_measure * 100:.1f}"])
    click.echo(_table(["IOU", "Recall", "Precision", "F-measure"], rows))
    _emit_json(result, out)


@cli.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--m", type=int, default=None, help="Contour frequency pairs; derived from --n if unset.")
@click.option("--samples", type=int, default=contour_codec.DEFAULT_CONTOUR_SAMPLES)
@click.option("--challenging-only", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default=None)
@_config_options
def compare(corpus, m, samples, challenging_only, out, **params):
    """Mask codec vs contour codec reconstruction quality at matched budget."""
    cfg = _pop_config(params)
    records = _load_corpus(corpus)
    if challenging_only:
        records = evaluate.challenging_subset(records)
        if not records:
            raise click.ClickException("challenging subset is empty")
    try:
        report = contour_codec.codec_compare(
            records, k=cfg.k, n=cfg.n, m=m, samples=samples, threshold=cfg.tau_b
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    result = {
        "k": report.k,
        "n": report.n,
        "m": report.m,
        "samples": report.samples,
        "instances": len(report.rows),
        "challenging_only": challenging_only,
        "mean_iou": {
            "mask_codec": round(report.mean("mask_codec_iou") * 100, 2),
            "contour_codec": round(report.mean("contour_codec_iou") * 100, 2),
            "box_baseline": round(report.mean("box_baseline_iou") * 100, 2),
        },
        "fraction_at": {
            f"{thr:.1f}": {
                "mask_codec": round(report.fraction_at("mask_codec_iou", thr) * 100, 2),
                "contour_codec": round(report.fraction_at("contour_codec_iou", thr) * 100, 2),
            }
            for thr in evaluate.REPORT_THRESHOLDS
        },
    }
    click.echo(
        _table(
            ["Codec", "Mean IOU"] + [f"IOU@{t:.1f}" for t in evaluate.REPORT_THRESHOLDS],
            [
                ["mask", result["mean_iou"]["mask_codec"]]
                + [result["fraction_at"][f"{t:.1f}"]["mask_codec"] for t in evaluate.REPORT_THRESHOLDS],
                ["contour", result["mean_iou"]["contour_codec"]]
                + [result["fraction_at"][f"{t:.1f}"]["contour_codec"] for t in evaluate.REPORT_THRESHOLDS],
            ],
        )
    )
    _emit_json(result, out)


@cli.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--dets", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def render(corpus, dets, out_dir):
    """Write PNG overlays: ground truth in green, detections in red."""
    from PIL import Image, ImageDraw

    records = _load_corpus(corpus)
    det_map = dataio.load_detections(dets) if dets else {}
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    for rec in records:
        w = rec.width if rec.width > 0 else 640
        h = rec.height if rec.height > 0 else 640
        img = Image.new("RGB", (w, h), "white")
        draw = ImageDraw.Draw(img)
        for inst in rec.instances:
            pts = [tuple(v) for v in inst.polygon.vertices]
            draw.polygon(pts, outline=(0, 170, 0), width=2)
        for score, polys in det_map.get(rec.image_id, []):
            for poly in polys:
                draw.polygon([tuple(v) for v in poly.vertices], outline=(220, 0, 0), width=2)
        img.save(out_path / f"{rec.image_id}.png")
    click.echo(f"rendered {len(records)} images to {out_dir}", err=True)


@cli.command()
@click.option("--scenarios", required=True, type=click.Path(exists=True),
              help="JSON lines: {boxes: [[x1,y1,x2,y2]...], scores: [...], kernel_ids: [...]}")
@click.option("--variant", type=click.Choice(sorted(postprocess.NMS_VARIANTS)), default="s-nms")
@click.option("--nms-iou", type=float, default=0.5)
@click.option("--out", required=True, type=click.Path())
def snms(scenarios, variant, nms_iou, out):
    """Run a suppression variant over box scenarios; emits kept input indices.

    Candidate input order stands in for the row-major cell order used to
    break score ties.
    """
    from .geometry import Box

    results = []
    with open(scenarios) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            boxes, scores = obj["boxes"], obj["scores"]
            kids = obj.get("kernel_ids", [0] * len(boxes))
            if not (len(boxes) == len(scores) == len(kids)):
                raise click.ClickException(f"line {lineno}: mismatched scenario lengths")
            dets = []
            for i, (bx, sc, kid) in enumerate(zip(boxes, scores, kids)):
                dets.append(
                    postprocess.Detection(
                        box=Box(*(float(v) for v in bx)),
                        score=float(sc),
                        vector=dct_codec.DctMaskVector(1, 1, np.zeros(1)),
                        source_cell=(0, i),
                        kernel_id=int(kid),
                    )
                )
            kept = postprocess.NMS_VARIANTS[variant](dets, nms_iou)
            keep_idx = sorted(d.source_cell[1] for d in kept)
            results.append({"keep": keep_idx})
    with open(out, "w") as fh:
        for res in results:
            fh.write(json.dumps(res, sort_keys=True) + "\n")
    click.echo(f"processed {len(results)} scenarios to {out}", err=True)


def main():
    cli(prog_name="dctmask")


if __name__ == "__main__":
    main()
