// Golden-file parity: the binding layer must reproduce the engine CLI's
// committed outputs bit-for-bit on the shared fixture corpus.

import { describe, expect, it } from "vitest";

import {
  coachSimFiles,
  coachStepHost,
  scoreBatch,
  scoreFiles,
  type CoachDirective,
  type HostSample,
  type PromptKind,
  type ScoreTarget,
  type ScoredTrace,
} from "../src/index.js";
import { fixture, rawLines, readFixture, readJsonl } from "./helpers.js";

interface TraceLine {
  sample_id: string;
  rollout_id: number;
  trace_text: string;
}

interface PolicyEntry {
  sample_id: string;
  question?: string;
  completions: string[];
}

interface SelectorEntry {
  sample_id: string;
  kind: PromptKind;
}

describe("score parity", () => {
  it("scoreFiles reproduces the golden reward log byte for byte", () => {
    const got = scoreFiles(fixture("traces_100.jsonl"), fixture("dataset_100.jsonl"));
    expect(got).toBe(readFixture("golden_rewards.jsonl"));
  });

  it("scoreBatch reproduces every golden reward float exactly", () => {
    const samples = readJsonl<HostSample>("dataset_100.jsonl").slice(1);
    const byId = new Map(samples.map((s) => [s.sample_id, s]));
    const traces = readJsonl<TraceLine>("traces_100.jsonl");
    const golden = readJsonl<ScoredTrace>("golden_rewards.jsonl");
    expect(golden.length).toBe(traces.length);

    const texts = traces.map((t) => t.trace_text);
    const targets: ScoreTarget[] = traces.map((t) => {
      const sample = byId.get(t.sample_id);
      if (!sample) throw new Error(`fixture trace references unknown ${t.sample_id}`);
      return { task_kind: sample.task_kind, gt: sample.gt };
    });

    const rewards = scoreBatch(texts, targets, undefined, "int999");
    expect(rewards.length).toBe(golden.length);
    for (let i = 0; i < golden.length; i++) {
      const want = golden[i].rewards;
      const got = rewards[i];
      expect(got.acc).toBe(want.acc);
      expect(got.fmt).toBe(want.fmt);
      expect(got.tmp).toBe(want.tmp);
      expect(got.spa).toBe(want.spa);
      expect(got.total).toBe(want.total);
      expect(got.candidate_stat).toBe(want.candidate_stat);
    }
  });
});

describe("coach parity", () => {
  it("coachSimFiles reproduces the golden directive log byte for byte", () => {
    const got = coachSimFiles(
      fixture("coach_dataset.jsonl"),
      `scripted:${fixture("coach_policy.jsonl")}`,
      `table:${fixture("coach_selector.jsonl")}`,
      0,
      1,
    );
    expect(got).toBe(readFixture("golden_directives.jsonl"));
  });

  it("coachStepHost matches the golden directive line on 100 samples", () => {
    const start = Date.now();
    const samples = readJsonl<HostSample>("coach_dataset.jsonl").slice(1);
    const goldenLines = rawLines("golden_directives.jsonl");
    expect(goldenLines.length).toBe(samples.length);

    const baselineById = new Map<string, string[]>();
    const promptedById = new Map<string, string[]>();
    for (const entry of readJsonl<PolicyEntry>("coach_policy.jsonl")) {
      const table = entry.question !== undefined ? baselineById : promptedById;
      table.set(entry.sample_id, entry.completions);
    }
    const kindById = new Map(
      readJsonl<SelectorEntry>("coach_selector.jsonl").map((e) => [e.sample_id, e.kind]),
    );

    for (let i = 0; i < 100; i++) {
      const sample = samples[i];
      const baseline = baselineById.get(sample.sample_id);
      if (!baseline) throw new Error(`no baseline completions for ${sample.sample_id}`);
      const prompted = promptedById.get(sample.sample_id) ?? null;
      const kind = kindById.get(sample.sample_id) ?? "circle";

      const { directive, line } = coachStepHost(sample, baseline, prompted, kind, undefined, 0);
      expect(line).toBe(goldenLines[i]);
      const want = JSON.parse(goldenLines[i]) as CoachDirective;
      expect(directive.sample_id).toBe(want.sample_id);
      expect(directive.hard).toBe(want.hard);
    }
    expect(Date.now() - start).toBeLessThan(30_000);
  });
});
