import { readFileSync, writeFileSync } from "node:fs";

/**
 * Binary mask stack container shared with the CLI:
 * magic "MSKB" (uint8 payload) or "MSKF" (float32 payload), then three
 * little-endian uint32 fields (version = 1, count, k) and count*k*k values
 * in row-major order.
 */

const VERSION = 1;

export function writeBinaryMaskStack(path: string, masks: ArrayLike<number>[], k: number): void {
  const header = Buffer.alloc(16);
  header.write("MSKB", 0, "ascii");
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(masks.length, 8);
  header.writeUInt32LE(k, 12);
  const payload = Buffer.alloc(masks.length * k * k);
  masks.forEach((mask, i) => {
    for (let j = 0; j < k * k; j++) {
      payload[i * k * k + j] = mask[j] !== 0 ? 1 : 0;
    }
  });
  writeFileSync(path, Buffer.concat([header, payload]));
}

export interface MaskStack {
  kind: "binary" | "float";
  k: number;
  masks: Array<Uint8Array | Float32Array>;
}

export function readMaskStack(path: string): MaskStack {
  const data = readFileSync(path);
  const magic = data.subarray(0, 4).toString("ascii");
  if (magic !== "MSKB" && magic !== "MSKF") {
    throw new Error(`not a mask stack (magic ${JSON.stringify(magic)})`);
  }
  const version = data.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported mask stack version ${version}`);
  }
  const count = data.readUInt32LE(8);
  const k = data.readUInt32LE(12);
  const kind = magic === "MSKB" ? "binary" : "float";
  const bytesPer = kind === "binary" ? 1 : 4;
  const expected = 16 + count * k * k * bytesPer;
  if (data.length !== expected) {
    throw new Error(`mask stack is ${data.length} bytes, expected ${expected}`);
  }
  const masks: Array<Uint8Array | Float32Array> = [];
  for (let i = 0; i < count; i++) {
    const start = 16 + i * k * k * bytesPer;
    if (kind === "binary") {
      masks.push(Uint8Array.from(data.subarray(start, start + k * k)));
    } else {
      const grid = new Float32Array(k * k);
      for (let j = 0; j < k * k; j++) {
        grid[j] = data.readFloatLE(start + j * 4);
      }
      masks.push(grid);
    }
  }
  return { kind, k, masks };
}

/** Parse a JSON-lines file into objects. */
export function readJsonl(path: string): any[] {
  return readFileSync(path, "utf8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

/** Serialize objects as JSON lines. */
export function writeJsonl(path: string, rows: unknown[]): void {
  writeFileSync(path, rows.map((row) => JSON.stringify(row)).join("\n") + (rows.length ? "\n" : ""));
}
