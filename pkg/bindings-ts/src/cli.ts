import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/**
 * Interpreter hosting the dctmask package. Override with DCTMASK_PYTHON
 * (e.g. a virtualenv interpreter) when python3 on PATH is not the one the
 * toolkit is installed into.
 */
export function pythonExecutable(): string {
  return process.env.DCTMASK_PYTHON ?? "python3";
}

/** Run one dctmask CLI command; throws with the CLI's stderr on failure. */
export function runCli(args: string[]): string {
  try {
    return execFileSync(pythonExecutable(), ["-m", "dctmask.cli", ...args], {
      encoding: "utf8",
      stdio: ["ignore", "pipe", "pipe"],
      maxBuffer: 256 * 1024 * 1024,
    });
  } catch (err) {
    const stderr = (err as { stderr?: string }).stderr ?? "";
    throw new Error(`dctmask ${args[0]} failed: ${String(stderr).trim() || String(err)}`);
  }
}

/** Run a callback with a private scratch directory, removed afterwards. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "dctmask-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
