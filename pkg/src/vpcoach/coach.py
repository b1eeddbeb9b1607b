"""Hard-sample coaching loop.

Per sample: roll out the policy G times on the raw input and average the
totals. Samples at or above the hardness threshold keep their baseline
advantages and stop there. Hard samples get one visual prompt kind from the
selector, G prompted rollouts, a candidate set of prompted rollouts that
beat the baseline mean of the candidate statistic, and a top-N
self-distillation set ranked by answer accuracy. Everything the host
trainer needs lands in one CoachDirective per sample.
"""

from __future__ import annotations

import zlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .errors import EmptyVideo, PolicyFailure, SelectorFailure
from .geometry import BoxConvention, NORMALIZED
from .prompts import (
    PromptKind,
    PromptedSample,
    RelevanceProvider,
    build_prompted_sample,
    load_frame,
    save_frame,
    uniform_sample_indices,
)
from .policies import Policy, PolicyRequest, Selector, SelectorRequest
from .rewards import (
    GroundTruthAnnotation,
    RewardBreakdown,
    RewardConfig,
    group_normalize,
    overall_reward,
)
from .trace import parse_trace


class RolloutSource(str, Enum):
    BASELINE = "baseline"
    PROMPTED = "prompted"


@dataclass(frozen=True)
class CoachConfig:
    """rollouts = group size G; hard_threshold lives on the total (0-4)
    reward scale; top_n caps the self-distillation set; sd_alpha is the
    distillation loss weight split evenly across selected targets.
    advantage_source picks which rollout group hard samples normalize over.
    """

    rollouts: int = 4
    hard_threshold: float = 2.21
    top_n: int = 2
    sd_alpha: float = 0.1
    advantage_source: str = "prompted"
    frames_per_sample: int = 16
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self) -> None:
        if self.rollouts < 1:
            raise ValueError("rollouts must be >= 1")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.sd_alpha < 0:
            raise ValueError("sd_alpha must be >= 0")
        if self.advantage_source not in ("baseline", "prompted"):
            raise ValueError("advantage_source must be 'baseline' or 'prompted'")
        if self.frames_per_sample < 1:
            raise ValueError("frames_per_sample must be >= 1")


DEFAULT_COACH = CoachConfig()


@dataclass(frozen=True)
class CoachSample:
    """One training sample as the coach sees it."""

    sample_id: str
    frame_paths: tuple[str, ...]
    question: str
    gt: GroundTruthAnnotation
    convention: BoxConvention = NORMALIZED
    fps: float = 1.0


@dataclass(frozen=True)
class Trajectory:
    text: str
    rewards: RewardBreakdown
    source: RolloutSource


@dataclass(frozen=True)
class HardDecision:
    hard: bool
    mean_total: float
    mean_stat: float


@dataclass(frozen=True)
class CoachDirective:
    """Everything a host trainer needs from one coached sample."""

    sample_id: str
    hard: bool
    baseline_mean: float
    baseline_mean_total: float
    advantages: tuple[float, ...]
    advantage_source: str
    selected_prompt: PromptKind | None
    candidate_set_size: int
    sd_targets: tuple[str, ...]
    sd_target_indices: tuple[int, ...]
    sd_alpha: float
    prompted_question: str | None
    relative_gain: float | None
    relative_gain_stat: float | None

    def to_json_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "hard": self.hard,
            "baseline_mean": self.baseline_mean,
            "baseline_mean_total": self.baseline_mean_total,
            "advantages": list(self.advantages),
            "advantage_source": self.advantage_source,
            "selected_prompt": self.selected_prompt.value if self.selected_prompt else None,
            "candidate_set_size": self.candidate_set_size,
            "sd_targets": list(self.sd_targets),
            "sd_target_indices": list(self.sd_target_indices),
            "sd_alpha": self.sd_alpha,
            "prompted_question": self.prompted_question,
            "relative_gain": self.relative_gain,
            "relative_gain_stat": self.relative_gain_stat,
        }


@dataclass(frozen=True)
class CoachStepResult:
    directive: CoachDirective
    baseline: tuple[Trajectory, ...]
    prompted: tuple[Trajectory, ...]


def per_sample_seed(seed: int, sample_id: str) -> int:
    """Stable per-sample seed independent of ordering and worker count."""
    return zlib.crc32(f"{seed}:{sample_id}".encode("utf-8")) & 0x7FFFFFFF


def run_rollouts(
    policy: Policy,
    request: PolicyRequest,
    gt: GroundTruthAnnotation,
    convention: BoxConvention,
    cfg: RewardConfig,
    source: RolloutSource,
) -> tuple[Trajectory, ...]:
    """Query the policy once and score every completion."""
    try:
        texts = policy.complete(request)
    except PolicyFailure:
        raise
    except Exception as err:
        raise PolicyFailure(f"sample {request.sample_id!r}: {err}") from err
    if len(texts) != request.rollouts:
        raise PolicyFailure(
            f"sample {request.sample_id!r}: policy returned {len(texts)} completions, "
            f"expected {request.rollouts}"
        )
    out = []
    for text in texts:
        trace = parse_trace(text, convention)
        out.append(Trajectory(text, overall_reward(trace, gt, cfg), source))
    return tuple(out)


def identify_hard(trajectories: Sequence[Trajectory], cfg: CoachConfig = DEFAULT_COACH) -> HardDecision:
    """hard iff the mean total reward falls strictly below the threshold.

    Also reports the mean candidate statistic, which gates the candidate set
    later (the two coincide whenever the statistic is the overall sum).
    """
    totals = [t.rewards.total for t in trajectories]
    stats = [t.rewards.candidate_stat for t in trajectories]
    mean_total = sum(totals) / len(totals)
    mean_stat = sum(stats) / len(stats)
    return HardDecision(mean_total < cfg.hard_threshold, mean_total, mean_stat)


def select_distillation_set(
    baseline_mean: float,
    prompted: Sequence[Trajectory],
    cfg: CoachConfig = DEFAULT_COACH,
) -> tuple[list[int], list[int]]:
    """(candidate indices, selected indices) within the prompted group.

    Candidates strictly beat baseline_mean on the candidate statistic.
    Selection keeps the top_n candidates by answer accuracy, breaking ties by
    higher total reward, then lower index; returned in that rank order.
    """
    candidates = [
        i for i, t in enumerate(prompted) if t.rewards.candidate_stat > baseline_mean
    ]
    ranked = sorted(
        candidates,
        key=lambda i: (-prompted[i].rewards.acc, -prompted[i].rewards.total, i),
    )
    return candidates, ranked[: cfg.top_n]


def relative_gain(baseline_mean: float, prompted_mean: float) -> float | None:
    """Percentage improvement over the baseline mean; None when undefined."""
    if baseline_mean <= 0:
        return None
    return (prompted_mean - baseline_mean) / baseline_mean * 100.0


def sd_loss_spec(directive: CoachDirective) -> list[tuple[str, float]]:
    """Per-target distillation weights: alpha split evenly across targets."""
    if not directive.sd_targets:
        return []
    weight = directive.sd_alpha / len(directive.sd_targets)
    return [(text, weight) for text in directive.sd_targets]


def _keyframe_positions(sample: CoachSample, sampled: Sequence[int]) -> list[int]:
    """Map annotated keyframe timestamps onto positions in the sampled list."""
    positions = []
    for kf in sample.gt.keyframes:
        original = round(kf.timestamp * sample.fps)
        original = min(len(sample.frame_paths) - 1, max(0, original))
        pos = min(range(len(sampled)), key=lambda i: abs(sampled[i] - original))
        positions.append(pos)
    return sorted(set(positions))


def _boxes_by_position(sample: CoachSample, sampled: Sequence[int], positions: Sequence[int]) -> dict[int, list]:
    boxes: dict[int, list] = {p: [] for p in positions}
    for kf in sample.gt.keyframes:
        original = min(len(sample.frame_paths) - 1, max(0, round(kf.timestamp * sample.fps)))
        pos = min(range(len(sampled)), key=lambda i: abs(sampled[i] - original))
        boxes[pos].extend(kf.all_boxes())
    return boxes


def _sample_indices(sample: CoachSample, cfg: CoachConfig) -> list[int]:
    # Frameless records are legal for text-only policies; rendering paths
    # still fail later with EmptyVideo if pixels are actually needed.
    if not sample.frame_paths:
        return []
    return uniform_sample_indices(len(sample.frame_paths), cfg.frames_per_sample)


def build_prompt_inputs(
    sample: CoachSample,
    kind: PromptKind,
    cfg: CoachConfig,
    *,
    render: bool,
    relevance_provider: RelevanceProvider | None = None,
    hints: Mapping[PromptKind, str] | None = None,
    prompt_dir=None,
) -> tuple[tuple[str, ...], str]:
    """(frame paths, question) for the prompted rollouts.

    With render=False only the question changes; pixel work is skipped for
    policies that never read frames. With render=True the sampled frames are
    loaded, prompted, and written under prompt_dir.
    """
    sampled = _sample_indices(sample, cfg)
    sampled_paths = tuple(sample.frame_paths[i] for i in sampled)
    from .prompts import DEFAULT_HINTS

    hint_map = DEFAULT_HINTS if hints is None else hints
    question = sample.question if kind is PromptKind.RAW else f"{sample.question}\n{hint_map[kind]}"
    if not render or kind is PromptKind.RAW:
        return sampled_paths, question
    if not sampled_paths:
        raise EmptyVideo(f"sample {sample.sample_id!r} has no frames to prompt")
    frames = [load_frame(p) for p in sampled_paths]
    positions = _keyframe_positions(sample, sampled)
    prompted: PromptedSample = build_prompted_sample(
        frames,
        sample.question,
        kind,
        gt_boxes=_boxes_by_position(sample, sampled, positions),
        keyframes=positions,
        relevance_provider=relevance_provider,
        hints=hint_map,
    )
    if prompt_dir is None:
        raise ValueError("prompt_dir is required when rendering prompted frames")
    out_dir = _ensure_dir(prompt_dir, sample.sample_id, kind.value)
    paths = []
    for i, frame in enumerate(prompted.frames):
        path = out_dir / f"frame_{i:03d}.png"
        save_frame(frame, path)
        paths.append(str(path))
    return tuple(paths), prompted.question


def _ensure_dir(root, *parts):
    from pathlib import Path

    out = Path(root).joinpath(*parts)
    out.mkdir(parents=True, exist_ok=True)
    return out


def coach_step(
    sample: CoachSample,
    policy: Policy,
    selector: Selector,
    cfg: CoachConfig = DEFAULT_COACH,
    *,
    seed: int = 0,
    relevance_provider: RelevanceProvider | None = None,
    hints: Mapping[PromptKind, str] | None = None,
    prompt_dir=None,
) -> CoachStepResult:
    """Run one sample through the coaching loop.

    PolicyFailure / SelectorFailure / EmptyVideo abort this sample and
    propagate; drivers catch them per sample so one bad sample never kills
    a run.
    """
    sampled = _sample_indices(sample, cfg)
    baseline_paths = tuple(sample.frame_paths[i] for i in sampled)
    request = PolicyRequest(sample.sample_id, baseline_paths, sample.question, cfg.rollouts, seed)
    baseline = run_rollouts(policy, request, sample.gt, sample.convention, cfg.reward, RolloutSource.BASELINE)
    decision = identify_hard(baseline, cfg)
    if not decision.hard:
        directive = CoachDirective(
            sample_id=sample.sample_id,
            hard=False,
            baseline_mean=decision.mean_stat,
            baseline_mean_total=decision.mean_total,
            advantages=tuple(group_normalize([t.rewards.total for t in baseline])),
            advantage_source="baseline",
            selected_prompt=None,
            candidate_set_size=0,
            sd_targets=(),
            sd_target_indices=(),
            sd_alpha=cfg.sd_alpha,
            prompted_question=None,
            relative_gain=None,
            relative_gain_stat=None,
        )
        return CoachStepResult(directive, baseline, ())
    try:
        kind = selector.select(SelectorRequest(sample.sample_id, baseline_paths, sample.question))
    except SelectorFailure:
        raise
    except Exception as err:
        raise SelectorFailure(f"sample {sample.sample_id!r}: {err}") from err
    prompted_paths, prompted_question = build_prompt_inputs(
        sample,
        kind,
        cfg,
        render=getattr(policy, "needs_frames", True),
        relevance_provider=relevance_provider,
        hints=hints,
        prompt_dir=prompt_dir,
    )
    prompted_request = PolicyRequest(
        sample.sample_id, prompted_paths, prompted_question, cfg.rollouts, seed
    )
    prompted = run_rollouts(
        policy, prompted_request, sample.gt, sample.convention, cfg.reward, RolloutSource.PROMPTED
    )
    candidates, selected = select_distillation_set(decision.mean_stat, prompted, cfg)
    advantage_group = prompted if cfg.advantage_source == "prompted" else baseline
    prompted_decision = identify_hard(prompted, cfg)
    directive = CoachDirective(
        sample_id=sample.sample_id,
        hard=True,
        baseline_mean=decision.mean_stat,
        baseline_mean_total=decision.mean_total,
        advantages=tuple(group_normalize([t.rewards.total for t in advantage_group])),
        advantage_source=cfg.advantage_source,
        selected_prompt=kind,
        candidate_set_size=len(candidates),
        sd_targets=tuple(prompted[i].text for i in selected),
        sd_target_indices=tuple(selected),
        sd_alpha=cfg.sd_alpha,
        prompted_question=prompted_question,
        relative_gain=relative_gain(decision.mean_total, prompted_decision.mean_total),
        relative_gain_stat=relative_gain(decision.mean_stat, prompted_decision.mean_stat),
    )
    return CoachStepResult(directive, baseline, prompted)


def run_coach(
    samples: Sequence[CoachSample],
    policy: Policy,
    selector: Selector,
    cfg: CoachConfig = DEFAULT_COACH,
    *,
    seed: int = 0,
    jobs: int = 1,
    relevance_provider: RelevanceProvider | None = None,
    hints: Mapping[PromptKind, str] | None = None,
    prompt_dir=None,
) -> tuple[list[CoachDirective], list[str]]:
    """Coach a dataset; directives come back in input order regardless of jobs.

    Per-sample failures become diagnostics instead of killing the run.
    """

    def work(item: tuple[int, CoachSample]):
        _, sample = item
        try:
            result = coach_step(
                sample,
                policy,
                selector,
                cfg,
                seed=per_sample_seed(seed, sample.sample_id),
                relevance_provider=relevance_provider,
                hints=hints,
                prompt_dir=prompt_dir,
            )
            return result.directive, None
        except (PolicyFailure, SelectorFailure, EmptyVideo) as err:
            return None, f"{sample.sample_id}: {err}"

    if jobs <= 1:
        results = [work(item) for item in enumerate(samples)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, enumerate(samples)))
    directives = [d for d, _ in results if d is not None]
    failures = [f for _, f in results if f is not None]
    return directives, failures


def run_summary(directives: Sequence[CoachDirective], failures: Sequence[str]) -> dict:
    hard = [d for d in directives if d.hard]
    gains = [d.relative_gain for d in hard if d.relative_gain is not None]
    stat_gains = [d.relative_gain_stat for d in hard if d.relative_gain_stat is not None]
    histogram = Counter(d.selected_prompt.value for d in hard if d.selected_prompt)
    return {
        "samples": len(directives) + len(failures),
        "scored": len(directives),
        "failures": len(failures),
        "hard": len(hard),
        "easy": len(directives) - len(hard),
        "with_sd_targets": sum(1 for d in hard if d.sd_targets),
        "selected_prompts": {k: histogram[k] for k in sorted(histogram)},
        "mean_relative_gain": sum(gains) / len(gains) if gains else None,
        "mean_relative_gain_stat": sum(stat_gains) / len(stat_gains) if stat_gains else None,
    }
