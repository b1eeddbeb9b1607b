// Config constructors. TypeScript types vanish at runtime, so the
// constructors also validate key names; a typo fails here instead of as an
// opaque engine usage error.

export interface RewardConfig {
  sigma?: number;
  tau?: number;
  spatial_mode?: "object_aware" | "max_iou" | "avg_iou";
  candidate_statistic?: "overall_sum" | "mean_acc_tmp_spa";
  include_bare_timestamps?: boolean;
  match_all_frame_boxes?: boolean;
  mcq_options?: string;
  rouge_correct_threshold?: number;
}

export interface MatchConfig {
  fuzzy_threshold?: number;
  jaccard_threshold?: number;
  normalize?: boolean;
  substring_score?: number;
  fuzzy_cap?: number;
  jaccard_cap?: number;
}

export interface CoachHostConfig {
  rollouts?: number;
  hard_threshold?: number;
  top_n?: number;
  sd_alpha?: number;
  advantage_source?: "prompted" | "baseline";
  frames_per_sample?: number;
}

export interface EngineConfig {
  reward?: RewardConfig;
  match?: MatchConfig;
  coach?: CoachHostConfig;
}

const KNOWN: Record<keyof EngineConfig, Set<string>> = {
  reward: new Set([
    "sigma",
    "tau",
    "spatial_mode",
    "candidate_statistic",
    "include_bare_timestamps",
    "match_all_frame_boxes",
    "mcq_options",
    "rouge_correct_threshold",
  ]),
  match: new Set([
    "fuzzy_threshold",
    "jaccard_threshold",
    "normalize",
    "substring_score",
    "fuzzy_cap",
    "jaccard_cap",
  ]),
  coach: new Set([
    "rollouts",
    "hard_threshold",
    "top_n",
    "sd_alpha",
    "advantage_source",
    "frames_per_sample",
  ]),
};

function checkKeys(section: keyof EngineConfig, value: object): void {
  for (const key of Object.keys(value)) {
    if (!KNOWN[section].has(key)) {
      throw new Error(`unknown ${section} config key '${key}'`);
    }
  }
}

export function rewardConfig(overrides: RewardConfig = {}): RewardConfig {
  checkKeys("reward", overrides);
  return Object.freeze({ ...overrides });
}

export function matchConfig(overrides: MatchConfig = {}): MatchConfig {
  checkKeys("match", overrides);
  return Object.freeze({ ...overrides });
}

export function coachConfig(overrides: CoachHostConfig = {}): CoachHostConfig {
  checkKeys("coach", overrides);
  return Object.freeze({ ...overrides });
}

export function engineConfig(overrides: EngineConfig = {}): EngineConfig {
  return Object.freeze({
    reward: rewardConfig(overrides.reward ?? {}),
    match: matchConfig(overrides.match ?? {}),
    coach: coachConfig(overrides.coach ?? {}),
  });
}

/** Serialize a config to the engine's dotted `key = value` file format. */
export function configFileLines(cfg: EngineConfig): string[] {
  const lines: string[] = [];
  for (const section of ["match", "reward", "coach"] as const) {
    const body = cfg[section];
    if (!body) continue;
    checkKeys(section, body);
    for (const [key, value] of Object.entries(body)) {
      if (value === undefined) continue;
      lines.push(`${section}.${key} = ${value}`);
    }
  }
  return lines;
}
