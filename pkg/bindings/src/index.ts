// Host-native entry points. Every operation here assembles the engine's wire
// formats, invokes the CLI, and parses what comes back; no scoring or coach
// logic is reimplemented on this side of the boundary.

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CliRuntimeError, CliUsageError, engineCommand, runCli } from "./cli.js";
import { configFileLines, type EngineConfig } from "./config.js";
import type {
  BoxConvention,
  CoachDirective,
  HostSample,
  PromptKind,
  RewardBreakdown,
  ScoreTarget,
  ScoredTrace,
} from "./types.js";

export * from "./types.js";
export * from "./config.js";
export { CliRuntimeError, CliUsageError, engineCommand, runCli };

const DATASET_SCHEMA = "vpcoach/dataset";
const SCHEMA_VERSION = 1;

interface Workspace {
  dir: string;
  file(name: string, lines: string[]): string;
  configArgs(cfg?: EngineConfig): string[];
  dispose(): void;
}

function workspace(): Workspace {
  const dir = mkdtempSync(join(tmpdir(), "vpcoach-"));
  return {
    dir,
    file(name: string, lines: string[]): string {
      const path = join(dir, name);
      writeFileSync(path, lines.map((l) => l + "\n").join(""), "utf8");
      return path;
    },
    configArgs(cfg?: EngineConfig): string[] {
      if (!cfg) return [];
      const lines = configFileLines(cfg);
      if (lines.length === 0) return [];
      return ["--config", this.file("vpcoach.cfg", lines)];
    },
    dispose(): void {
      rmSync(dir, { recursive: true, force: true });
    },
  };
}

function datasetHeader(convention: BoxConvention): string {
  return JSON.stringify({
    schema: DATASET_SCHEMA,
    version: SCHEMA_VERSION,
    box_convention: convention,
  });
}

function parseLines<T>(content: string): T[] {
  return content
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as T);
}

/**
 * Score aligned (trace, target) pairs. Values are exactly what the engine's
 * `score` subcommand emits for the same inputs; a malformed trace scores as
 * zeros with fmt 0 rather than raising.
 */
export function scoreBatch(
  traces: string[],
  targets: ScoreTarget[],
  cfg?: EngineConfig,
  convention: BoxConvention = "normalized",
): RewardBreakdown[] {
  if (traces.length !== targets.length) {
    throw new Error(
      `traces (${traces.length}) and targets (${targets.length}) must align`,
    );
  }
  if (traces.length === 0) return [];
  const ws = workspace();
  try {
    const ids = traces.map((_, i) => `b${String(i).padStart(5, "0")}`);
    const datasetPath = ws.file("dataset.jsonl", [
      datasetHeader(convention),
      ...targets.map((target, i) =>
        JSON.stringify({
          sample_id: ids[i],
          task_kind: target.task_kind,
          gt: target.gt,
        }),
      ),
    ]);
    const tracesPath = ws.file(
      "traces.jsonl",
      traces.map((text, i) =>
        JSON.stringify({ sample_id: ids[i], rollout_id: 0, trace_text: text }),
      ),
    );
    const outPath = join(ws.dir, "rewards.jsonl");
    runCli([
      "score",
      "--traces",
      tracesPath,
      "--dataset",
      datasetPath,
      "--out",
      outPath,
      ...ws.configArgs(cfg),
    ]);
    const scored = parseLines<ScoredTrace>(readFileSync(outPath, "utf8"));
    const byId = new Map(scored.map((rec) => [rec.sample_id, rec.rewards]));
    return ids.map((id) => {
      const rewards = byId.get(id);
      if (!rewards) {
        throw new CliRuntimeError(`engine returned no rewards for ${id}`, "");
      }
      return rewards;
    });
  } finally {
    ws.dispose();
  }
}

/**
 * Run `score` on existing JSONL files and return the raw output file content
 * (one scored record per line, trailing newline), for byte-level comparison
 * against golden logs.
 */
export function scoreFiles(
  tracesPath: string,
  datasetPath: string,
  cfg?: EngineConfig,
): string {
  const ws = workspace();
  try {
    const outPath = join(ws.dir, "rewards.jsonl");
    runCli([
      "score",
      "--traces",
      tracesPath,
      "--dataset",
      datasetPath,
      "--out",
      outPath,
      ...ws.configArgs(cfg),
    ]);
    return readFileSync(outPath, "utf8");
  } finally {
    ws.dispose();
  }
}

export interface CoachStepResult {
  directive: CoachDirective;
  /** The directive exactly as the engine serialized it, for parity checks. */
  line: string;
}

/**
 * Produce the directive the coach would emit for one sample, given host-side
 * completions. `baseline` answers the original question; `prompted` (if the
 * sample turns out hard) answers the hint-augmented question for `kind`.
 * Passing prompted completions with kind "raw" has no effect: the raw prompt
 * reuses the original question verbatim, so on the wire the baseline entry
 * answers both phases. A hard sample with `prompted` null fails like the
 * primary does when its policy cannot answer the prompted question.
 */
export function coachStepHost(
  sample: HostSample,
  baseline: string[],
  prompted: string[] | null,
  kind: PromptKind = "circle",
  cfg?: EngineConfig,
  seed = 0,
  convention: BoxConvention = "normalized",
): CoachStepResult {
  const ws = workspace();
  try {
    const datasetPath = ws.file("dataset.jsonl", [
      datasetHeader(convention),
      JSON.stringify(sample),
    ]);
    const policyEntries = [
      JSON.stringify({
        sample_id: sample.sample_id,
        question: sample.question,
        completions: baseline,
      }),
    ];
    if (prompted !== null) {
      policyEntries.push(
        JSON.stringify({ sample_id: sample.sample_id, completions: prompted }),
      );
    }
    const policyPath = ws.file("policy.jsonl", policyEntries);
    const outPath = join(ws.dir, "directives.jsonl");
    runCli([
      "coach-sim",
      "--dataset",
      datasetPath,
      "--policy",
      `scripted:${policyPath}`,
      "--selector",
      `constant:${kind}`,
      "--seed",
      String(seed),
      "--out",
      outPath,
      ...ws.configArgs(cfg),
    ]);
    const lines = readFileSync(outPath, "utf8")
      .split("\n")
      .filter((l) => l.trim().length > 0);
    if (lines.length !== 1) {
      throw new CliRuntimeError(
        `expected one directive, engine wrote ${lines.length}`,
        "",
      );
    }
    return { directive: JSON.parse(lines[0]) as CoachDirective, line: lines[0] };
  } finally {
    ws.dispose();
  }
}

/**
 * Run `coach-sim` against existing dataset/policy/selector inputs and return
 * the raw directive log content for byte-level golden comparison. `policy`
 * and `selector` are engine specs passed through verbatim (`scripted:FILE`,
 * `constant:KIND`, `table:FILE`, `cmd:COMMAND`).
 */
export function coachSimFiles(
  datasetPath: string,
  policy: string,
  selector: string,
  seed = 0,
  jobs = 1,
  cfg?: EngineConfig,
): string {
  const ws = workspace();
  try {
    const outPath = join(ws.dir, "directives.jsonl");
    runCli([
      "coach-sim",
      "--dataset",
      datasetPath,
      "--policy",
      policy,
      "--selector",
      selector,
      "--seed",
      String(seed),
      "--jobs",
      String(jobs),
      "--out",
      outPath,
      ...ws.configArgs(cfg),
    ]);
    return readFileSync(outPath, "utf8");
  } finally {
    ws.dispose();
  }
}
