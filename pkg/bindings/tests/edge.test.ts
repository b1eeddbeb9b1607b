// Behavior at the boundary: empty input, malformed traces, missing prompted
// completions, config plumbing, and error mapping.

import { describe, expect, it } from "vitest";

import {
  CliRuntimeError,
  CliUsageError,
  coachStepHost,
  configFileLines,
  engineConfig,
  rewardConfig,
  scoreBatch,
  type HostSample,
  type PromptKind,
  type ScoreTarget,
} from "../src/index.js";

const SAMPLE: HostSample = {
  sample_id: "h000",
  task_kind: "mcq",
  question: "Which object moves? A. the cup B. the dog C. the laptop D. the plant",
  gt: {
    answer: "C",
    temporal: { positions: [3.0] },
    keyframes: [{ t: 3.0, objects: [{ name: "laptop", boxes: [[0.2, 0.2, 0.6, 0.6]] }] }],
  },
};

const GOOD =
  "<think>watch <obj>laptop</obj><box>[0.2, 0.2, 0.6, 0.6]</box>at<t>3.0</t>s</think>" +
  "<answer>C</answer>";
const BAD = "<think>hard to tell</think><answer>A</answer>";
const TARGET: ScoreTarget = { task_kind: SAMPLE.task_kind, gt: SAMPLE.gt };

describe("scoreBatch edges", () => {
  it("returns an empty list for an empty batch without spawning", () => {
    expect(scoreBatch([], [])).toEqual([]);
  });

  it("rejects misaligned inputs", () => {
    expect(() => scoreBatch([GOOD], [])).toThrow(/must align/);
  });

  it("scores a malformed trace as zeros with fmt 0", () => {
    const [r] = scoreBatch(["no tags here at all"], [TARGET]);
    expect(r.fmt).toBe(0);
    expect(r.acc).toBe(0);
    expect(r.tmp).toBe(0);
    expect(r.spa).toBe(0);
    expect(r.total).toBe(0);
  });

  it("scores a perfect trace at full marks", () => {
    const [r] = scoreBatch([GOOD], [TARGET]);
    expect(r.acc).toBe(1);
    expect(r.fmt).toBe(1);
    expect(r.tmp).toBe(1);
    expect(r.spa).toBe(1);
    expect(r.total).toBe(4);
  });

  it("reward config reaches the engine: sigma reshapes tmp", () => {
    const offByTwo =
      "<think>see <obj>laptop</obj><box>[0.2, 0.2, 0.6, 0.6]</box>at<t>5.0</t>s</think>" +
      "<answer>C</answer>";
    const [wide] = scoreBatch([offByTwo], [TARGET]);
    const [narrow] = scoreBatch(
      [offByTwo],
      [TARGET],
      engineConfig({ reward: { sigma: 0.5 } }),
    );
    expect(wide.tmp).toBeCloseTo(Math.exp(-0.5), 12);
    expect(narrow.tmp).toBeCloseTo(Math.exp(-8), 12);
    expect(narrow.tmp).not.toBe(wide.tmp);
  });
});

describe("coachStepHost edges", () => {
  it("easy sample with no prompted completions yields an easy directive", () => {
    const { directive } = coachStepHost(SAMPLE, [GOOD, GOOD, GOOD, GOOD], null);
    expect(directive.hard).toBe(false);
    expect(directive.selected_prompt).toBeNull();
    expect(directive.sd_target_indices).toEqual([]);
    expect(directive.sd_targets).toEqual([]);
    expect(directive.advantages).toEqual([0, 0, 0, 0]);
  });

  it("hard sample with prompted completions selects and distills", () => {
    const { directive } = coachStepHost(
      SAMPLE,
      [BAD, BAD, BAD, BAD],
      [GOOD, GOOD, GOOD, GOOD],
      "darken",
    );
    expect(directive.hard).toBe(true);
    expect(directive.selected_prompt).toBe("darken");
    expect(directive.candidate_set_size).toBe(4);
    expect(directive.sd_target_indices).toEqual([0, 1]);
    expect(directive.prompted_question.startsWith(SAMPLE.question + "\n")).toBe(true);
  });

  it("hard sample with prompted null fails like the engine does", () => {
    expect(() => coachStepHost(SAMPLE, [BAD, BAD, BAD, BAD], null)).toThrow(
      CliRuntimeError,
    );
  });

  it("unknown prompt kind maps to a usage error", () => {
    expect(() =>
      coachStepHost(SAMPLE, [GOOD, GOOD, GOOD, GOOD], null, "bogus" as PromptKind),
    ).toThrow(CliUsageError);
  });
});

describe("config plumbing", () => {
  it("serializes dotted key = value lines", () => {
    const cfg = engineConfig({
      reward: { sigma: 0.5, spatial_mode: "object_aware" },
      coach: { hard_threshold: 3.5 },
    });
    const lines = configFileLines(cfg);
    expect(lines).toContain("reward.sigma = 0.5");
    expect(lines).toContain("reward.spatial_mode = object_aware");
    expect(lines).toContain("coach.hard_threshold = 3.5");
  });

  it("rejects unknown keys before any process spawns", () => {
    expect(() => rewardConfig({ nonsense: 1 } as never)).toThrow(
      /unknown reward config key/,
    );
  });
});
