// Wire-format records, field names exactly as the engine reads and writes
// them in JSONL. The binding layer never reshapes values; it only moves
// them across the process boundary.

export type PromptKind = "raw" | "circle" | "darken" | "numpro" | "api_prompt";

export type TaskKind =
  | "mcq"
  | "open_ended"
  | "spatial_grounding"
  | "temporal_grounding";

export type BoxConvention = "normalized" | "int999" | { pixel: [number, number] };

export interface TemporalAnnotation {
  positions?: number[];
  intervals?: [number, number][];
}

export interface KeyframeObject {
  name: string;
  boxes: number[][];
}

export interface Keyframe {
  t: number;
  objects: KeyframeObject[];
}

export interface GroundTruth {
  answer?: string;
  answer_box?: number[];
  answer_interval?: [number, number];
  temporal?: TemporalAnnotation;
  keyframes?: Keyframe[];
}

/** One scoring target: what a single trace is judged against. */
export interface ScoreTarget {
  task_kind: TaskKind;
  gt: GroundTruth;
}

/** One coach input sample, mirroring a dataset JSONL record. */
export interface HostSample {
  sample_id: string;
  task_kind: TaskKind;
  question: string;
  gt: GroundTruth;
  frame_paths?: string[];
  fps?: number;
}

export interface RewardBreakdown {
  acc: number;
  fmt: number;
  tmp: number;
  spa: number;
  total: number;
  candidate_stat: number;
}

export interface ScoredTrace {
  sample_id: string;
  rollout_id: number;
  trace_text: string;
  rewards: RewardBreakdown;
}

export interface CoachDirective {
  sample_id: string;
  hard: boolean;
  baseline_mean: number;
  baseline_mean_total: number;
  advantages: number[];
  advantage_source: "baseline" | "prompted";
  selected_prompt: PromptKind | null;
  candidate_set_size: number;
  sd_targets: string[];
  sd_target_indices: number[];
  sd_alpha: number;
  prompted_question: string | null;
  relative_gain: number | null;
  relative_gain_stat: number | null;
}
