// Thin process wrapper around the engine CLI. All scoring and coaching logic
// lives on the Python side; this module only spawns it and maps exit codes
// onto typed errors.

import { spawnSync } from "node:child_process";

/** Exit code 2: bad arguments or bad config. */
export class CliUsageError extends Error {
  readonly stderr: string;

  constructor(message: string, stderr: string) {
    super(message);
    this.name = "CliUsageError";
    this.stderr = stderr;
  }
}

/** Exit code 1: runtime failure (missing files, invalid data, policy errors). */
export class CliRuntimeError extends Error {
  readonly stderr: string;

  constructor(message: string, stderr: string) {
    super(message);
    this.name = "CliRuntimeError";
    this.stderr = stderr;
  }
}

/**
 * Resolve the engine command. Defaults to `python3 -m vpcoach.cli`; the
 * VPCOACH_CLI environment variable overrides it (split on whitespace), e.g.
 * VPCOACH_CLI="vpcoach" or VPCOACH_CLI="/opt/py/bin/python3 -m vpcoach.cli".
 */
export function engineCommand(): string[] {
  const raw = process.env.VPCOACH_CLI;
  if (raw && raw.trim().length > 0) {
    return raw.trim().split(/\s+/);
  }
  return ["python3", "-m", "vpcoach.cli"];
}

export interface CliResult {
  stdout: string;
  stderr: string;
}

/** Run one engine subcommand, returning stdout or throwing a typed error. */
export function runCli(args: string[]): CliResult {
  const [cmd, ...prefix] = engineCommand();
  const proc = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw proc.error;
  }
  const stderr = proc.stderr ?? "";
  if (proc.status === 2) {
    throw new CliUsageError(
      `engine rejected arguments: ${lastLine(stderr)}`,
      stderr,
    );
  }
  if (proc.status !== 0) {
    throw new CliRuntimeError(
      `engine failed (exit ${proc.status}): ${lastLine(stderr)}`,
      stderr,
    );
  }
  return { stdout: proc.stdout ?? "", stderr };
}

function lastLine(text: string): string {
  const lines = text.trim().split("\n");
  return lines[lines.length - 1] ?? "";
}
