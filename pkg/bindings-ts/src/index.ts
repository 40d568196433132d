/**
 * Thin bindings over the dctmask toolkit. Every bound function drives the
 * installed `dctmask` CLI through its documented file formats (JSON lines
 * plus the binary mask-stack container), so results are exactly what the
 * primary library computes. Crossing the process boundary copies buffers
 * by construction; inputs are validated before anything is spawned.
 */

import { join } from "node:path";

import { runCli, withTempDir } from "./cli.js";
import { readJsonl, readMaskStack, writeBinaryMaskStack, writeJsonl } from "./wire.js";

export { pythonExecutable } from "./cli.js";
export {
  diceLoss,
  giouLoss,
  maskVectorLoss,
  smoothL1,
  totalLoss,
  type BoxTuple,
  type LossBreakdown,
} from "./losses.js";
export { readMaskStack, type MaskStack } from "./wire.js";

export interface CodecOptions {
  /** Mask resolution (default 64). */
  k?: number;
  /** Retained coefficient count (default 300). */
  n?: number;
}

/**
 * Encode row-major k*k binary masks into zigzag DCT coefficient vectors.
 * Returns one Float64Array of length n per mask; empty input yields [].
 */
export function encodeMasks(masks: ArrayLike<number>[], options: CodecOptions = {}): Float64Array[] {
  const k = options.k ?? 64;
  const n = options.n ?? 300;
  if (!Number.isInteger(k) || k <= 0 || !Number.isInteger(n) || n < 1 || n > k * k) {
    throw new TypeError(`invalid codec shape: k=${k}, n=${n} (need 1 <= n <= k*k)`);
  }
  masks.forEach((mask, i) => {
    if (mask.length !== k * k) {
      throw new TypeError(`mask ${i} has ${mask.length} values, expected k*k = ${k * k}`);
    }
  });
  if (masks.length === 0) {
    return [];
  }
  return withTempDir((dir) => {
    const masksPath = join(dir, "masks.bin");
    const vectorsPath = join(dir, "vectors.jsonl");
    writeBinaryMaskStack(masksPath, masks, k);
    runCli([
      "encode", "--masks", masksPath, "--k", String(k), "--n", String(n),
      "--out", vectorsPath,
    ]);
    const rows = readJsonl(vectorsPath);
    rows.sort((a, b) => a.index - b.index);
    return rows.map((row) => Float64Array.from(row.coeffs as number[]));
  });
}

export interface DecodeOptions {
  /** Mask resolution the vectors were encoded at (default 64). */
  k?: number;
  /** Return binary masks thresholded at tauB instead of float grids. */
  binarize?: boolean;
  tauB?: number;
}

/**
 * Decode coefficient vectors back to k*k grids (row-major). Float grids by
 * default; set binarize for uint8 masks thresholded at tauB.
 */
export function decodeVectors(
  vectors: ArrayLike<number>[],
  options: DecodeOptions = {},
): Array<Float32Array | Uint8Array> {
  const k = options.k ?? 64;
  if (!Number.isInteger(k) || k <= 0) {
    throw new TypeError(`invalid resolution k=${k}`);
  }
  vectors.forEach((vec, i) => {
    if (vec.length < 1 || vec.length > k * k) {
      throw new TypeError(`vector ${i} has ${vec.length} values, expected 1..k*k = ${k * k}`);
    }
  });
  if (vectors.length === 0) {
    return [];
  }
  return withTempDir((dir) => {
    const vectorsPath = join(dir, "vectors.jsonl");
    const masksPath = join(dir, "masks.bin");
    writeJsonl(
      vectorsPath,
      Array.from(vectors, (vec, index) => ({
        index,
        k,
        n: vec.length,
        coeffs: Array.from(vec),
      })),
    );
    const args = ["decode", "--vectors", vectorsPath, "--out", masksPath];
    if (options.binarize) {
      args.push("--binarize", "--tau-b", String(options.tauB ?? 0.35));
    }
    runCli(args);
    return readMaskStack(masksPath).masks;
  });
}

export interface SuppressionScenario {
  /** Candidate boxes as [xMin, yMin, xMax, yMax]. */
  boxes: ReadonlyArray<readonly number[]>;
  scores: readonly number[];
  /** Kernel component id per candidate. */
  kernelIds: readonly number[];
}

export type SuppressionVariant = "s-nms" | "nms" | "k-nms";

export interface SuppressionOptions {
  variant?: SuppressionVariant;
  nmsIou?: number;
}

/**
 * Run a suppression variant over box scenarios; returns the kept input
 * indices per scenario. Candidate order stands in for row-major cell order
 * when breaking score ties.
 */
export function sNms(
  scenarios: SuppressionScenario[],
  options: SuppressionOptions = {},
): number[][] {
  scenarios.forEach((sc, i) => {
    if (sc.boxes.length !== sc.scores.length || sc.boxes.length !== sc.kernelIds.length) {
      throw new TypeError(
        `scenario ${i}: boxes/scores/kernelIds lengths differ ` +
          `(${sc.boxes.length}/${sc.scores.length}/${sc.kernelIds.length})`,
      );
    }
    sc.boxes.forEach((box, j) => {
      if (box.length !== 4) {
        throw new TypeError(`scenario ${i} box ${j} has ${box.length} values, expected 4`);
      }
    });
  });
  if (scenarios.length === 0) {
    return [];
  }
  return withTempDir((dir) => {
    const scenarioPath = join(dir, "scenarios.jsonl");
    const keepPath = join(dir, "keep.jsonl");
    writeJsonl(
      scenarioPath,
      scenarios.map((sc) => ({
        boxes: sc.boxes.map((b) => Array.from(b)),
        scores: Array.from(sc.scores),
        kernel_ids: Array.from(sc.kernelIds),
      })),
    );
    runCli([
      "snms", "--scenarios", scenarioPath,
      "--variant", options.variant ?? "s-nms",
      "--nms-iou", String(options.nmsIou ?? 0.5),
      "--out", keepPath,
    ]);
    return readJsonl(keepPath).map((row) => row.keep as number[]);
  });
}

export interface InstanceInput {
  points: ReadonlyArray<readonly [number, number]>;
  ignore?: boolean;
}

export interface CorpusRecordInput {
  imageId: string;
  width: number;
  height: number;
  instances: InstanceInput[];
}

export interface LabelOptions extends CodecOptions {
  stride?: number;
  shrinkRate?: number;
  centerSampling?: boolean;
  radiusCells?: number;
}

export interface PositiveCell {
  cell: [number, number];
  box: [number, number, number, number];
  instance: number;
}

export interface BoundLabelGrid {
  imageId: string;
  stride: number;
  rows: number;
  cols: number;
  k: number;
  n: number;
  conflicts: number;
  positives: PositiveCell[];
  ignoreCells: Array<[number, number]>;
  vectorTable: Float64Array[];
}

/** Generate per-image training label grids for a corpus. */
export function generateLabels(
  records: CorpusRecordInput[],
  options: LabelOptions = {},
): BoundLabelGrid[] {
  records.forEach((rec, i) => {
    rec.instances.forEach((inst, j) => {
      if (inst.points.length < 3) {
        throw new TypeError(
          `record ${i} instance ${j} has ${inst.points.length} points, need >= 3`,
        );
      }
    });
  });
  if (records.length === 0) {
    return [];
  }
  return withTempDir((dir) => {
    const corpusPath = join(dir, "corpus.jsonl");
    const labelsPath = join(dir, "labels.jsonl");
    writeJsonl(
      corpusPath,
      records.map((rec) => ({
        schema_version: 1,
        image_id: rec.imageId,
        width: rec.width,
        height: rec.height,
        instances: rec.instances.map((inst) => ({
          points: inst.points.map((p) => [p[0], p[1]]),
          ignore: inst.ignore ?? false,
        })),
      })),
    );
    const args = [
      "labels", "--corpus", corpusPath, "--out", labelsPath,
      "--k", String(options.k ?? 64),
      "--n", String(options.n ?? 300),
      "--stride", String(options.stride ?? 8),
      "--shrink-rate", String(options.shrinkRate ?? 0.5),
    ];
    if (options.centerSampling) {
      args.push("--center-sampling", "--radius", String(options.radiusCells ?? 1));
    }
    runCli(args);
    return readJsonl(labelsPath).map((row) => ({
      imageId: row.image_id as string,
      stride: row.stride as number,
      rows: row.rows as number,
      cols: row.cols as number,
      k: row.k as number,
      n: row.n as number,
      conflicts: row.conflicts as number,
      positives: row.positives as PositiveCell[],
      ignoreCells: row.ignore_cells as Array<[number, number]>,
      vectorTable: (row.vector_table as number[][]).map((v) => Float64Array.from(v)),
    }));
  });
}
