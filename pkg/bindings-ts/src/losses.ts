/**
 * Reference loss values mirrored from the toolkit. These are closed-form
 * expressions over plain numbers, so they are evaluated natively rather
 * than across the process boundary; the shared worked examples pin them to
 * the primary implementation.
 */

/** Box as [xMin, yMin, xMax, yMax]. */
export type BoxTuple = readonly [number, number, number, number];

/** 1 - 2*sum(pred*gt) / (sum(pred) + sum(gt)); empty/empty gives 0. */
export function diceLoss(pred: ArrayLike<number>, gt: ArrayLike<number>): number {
  if (pred.length !== gt.length) {
    throw new TypeError(`dice grids differ in size: ${pred.length} vs ${gt.length}`);
  }
  let overlap = 0;
  let total = 0;
  for (let i = 0; i < pred.length; i++) {
    overlap += pred[i] * gt[i];
    total += pred[i] + gt[i];
  }
  if (total === 0) {
    return 0;
  }
  return 1 - (2 * overlap) / total;
}

function boxArea(b: BoxTuple): number {
  return Math.max(0, b[2] - b[0]) * Math.max(0, b[3] - b[1]);
}

/** 1 - IoU + |C - (A ∪ B)| / |C| with C the smallest enclosing box. */
export function giouLoss(a: BoxTuple, b: BoxTuple): number {
  if (a.length !== 4 || b.length !== 4) {
    throw new TypeError("boxes must be [xMin, yMin, xMax, yMax]");
  }
  const ix = Math.max(0, Math.min(a[2], b[2]) - Math.max(a[0], b[0]));
  const iy = Math.max(0, Math.min(a[3], b[3]) - Math.max(a[1], b[1]));
  const inter = ix * iy;
  const union = boxArea(a) + boxArea(b) - inter;
  const iou = union > 0 ? inter / union : 0;
  const enclosing: BoxTuple = [
    Math.min(a[0], b[0]),
    Math.min(a[1], b[1]),
    Math.max(a[2], b[2]),
    Math.max(a[3], b[3]),
  ];
  const cArea = boxArea(enclosing);
  const penalty = cArea > 0 ? (cArea - union) / cArea : 0;
  return 1 - iou + penalty;
}

/** 0.5*x^2 for |x| < beta, |x| - beta/2 otherwise. */
export function smoothL1(x: number, beta = 1): number {
  const ax = Math.abs(x);
  return ax < beta ? 0.5 * ax * ax : ax - 0.5 * beta;
}

/** Summed smooth-L1 over coefficient differences, gated by the text flag. */
export function maskVectorLoss(
  pred: ArrayLike<number>,
  gt: ArrayLike<number>,
  isText = true,
  beta = 1,
): number {
  if (pred.length !== gt.length) {
    throw new TypeError(`vector dimension mismatch: ${pred.length} vs ${gt.length}`);
  }
  if (!isText) {
    return 0;
  }
  let sum = 0;
  for (let i = 0; i < pred.length; i++) {
    sum += smoothL1(pred[i] - gt[i], beta);
  }
  return sum;
}

export interface LossBreakdown {
  lCls: number;
  lBox: number;
  lMask: number;
  lambdaBox: number;
  lambdaMask: number;
  total: number;
}

export function totalLoss(
  lCls: number,
  lBox: number,
  lMask: number,
  lambdaBox = 1,
  lambdaMask = 1,
): LossBreakdown {
  return {
    lCls,
    lBox,
    lMask,
    lambdaBox,
    lambdaMask,
    total: lCls + lambdaBox * lBox + lambdaMask * lMask,
  };
}
