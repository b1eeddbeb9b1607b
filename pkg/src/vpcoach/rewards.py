"""Verifiable rewards for grounded video reasoning traces.

Four components, each in [0, 1], summed into a total in [0, 4]:

  acc  task answer correctness (letter match / ROUGE-L / box IoU / interval IoU)
  fmt  binary trace-grammar compliance
  tmp  temporal closeness of claimed timestamps to the annotated evidence
  spa  spatial quality of claimed boxes at their matched keyframes

The spatial component has three modes: the object-aware default (identity
matching gates which claims count at all) and two diagnostic ablations that
drop identity matching (max-IoU and per-object-average-IoU).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyGroundTruth, MissingGroundTruth, NoAnswerFound
from .geometry import (
    BoundingBox,
    KeyframeObjects,
    TemporalAnnotation,
    box_iou,
    interval_iou,
    match_timestamp,
)
from .matching import DEFAULT_MATCH, MatchConfig, rouge_l_f1, soft_identity_match
from .trace import ParsedTrace, TaskKind, extract_answer


class SpatialMode(str, Enum):
    OBJECT_AWARE = "object_aware"
    MAX_IOU = "max_iou"
    AVG_IOU = "avg_iou"


class CandidateStatistic(str, Enum):
    OVERALL_SUM = "overall_sum"
    MEAN_ACC_TMP_SPA = "mean_acc_tmp_spa"


@dataclass(frozen=True)
class RewardConfig:
    """Reward shaping knobs.

    sigma is the Gaussian width (seconds) for out-of-interval timestamps; tau
    the keyframe-distance gate (seconds) for spatial credit.
    include_bare_timestamps counts timestamp tags outside grounding tuples
    toward the temporal reward. match_all_frame_boxes switches the
    object-aware inner max from the matched object's own boxes to every box
    at the frame.
    """

    sigma: float = 2.0
    tau: float = 1.0
    spatial_mode: SpatialMode = SpatialMode.OBJECT_AWARE
    candidate_statistic: CandidateStatistic = CandidateStatistic.MEAN_ACC_TMP_SPA
    include_bare_timestamps: bool = True
    match_all_frame_boxes: bool = False
    mcq_options: str = "ABCDE"
    rouge_correct_threshold: float = 0.5
    match: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not self.mcq_options:
            raise ValueError("mcq_options must be non-empty")


DEFAULT_REWARDS = RewardConfig()


@dataclass(frozen=True)
class GroundTruthAnnotation:
    """Per-sample supervision.

    `answer` serves MCQ (option letter) and open-ended (reference text)
    tasks; grounding tasks use `answer_box` / `answer_interval` instead.
    temporal/keyframe supervision is optional; absent pieces zero out the
    corresponding reward components.
    """

    task_kind: TaskKind
    answer: str | None = None
    answer_box: BoundingBox | None = None
    answer_interval: tuple[float, float] | None = None
    temporal: TemporalAnnotation | None = None
    keyframes: tuple[KeyframeObjects, ...] = ()


@dataclass(frozen=True)
class RewardBreakdown:
    acc: float
    fmt: float
    tmp: float
    spa: float
    total: float
    candidate_stat: float
    missing: tuple[str, ...] = ()

    @classmethod
    def build(
        cls,
        acc: float,
        fmt: float,
        tmp: float,
        spa: float,
        statistic: CandidateStatistic,
        missing: tuple[str, ...] = (),
    ) -> "RewardBreakdown":
        total = acc + fmt + tmp + spa
        if statistic is CandidateStatistic.OVERALL_SUM:
            stat = total
        else:
            stat = (acc + tmp + spa) / 3.0
        return cls(acc, fmt, tmp, spa, total, stat, missing)

    def to_json_dict(self) -> dict:
        return {
            "acc": self.acc,
            "fmt": self.fmt,
            "tmp": self.tmp,
            "spa": self.spa,
            "total": self.total,
            "candidate_stat": self.candidate_stat,
        }


def accuracy_reward(trace: ParsedTrace, gt: GroundTruthAnnotation, cfg: RewardConfig = DEFAULT_REWARDS) -> float:
    """Answer correctness in [0, 1]; an unextractable answer scores 0.

    Raises MissingGroundTruth when the annotation lacks the field the task
    kind needs.
    """
    kind = gt.task_kind
    if kind in (TaskKind.MCQ, TaskKind.OPEN_ENDED) and gt.answer is None:
        raise MissingGroundTruth(f"{kind.value} sample has no answer")
    if kind is TaskKind.SPATIAL_GROUNDING and gt.answer_box is None:
        raise MissingGroundTruth("spatial grounding sample has no answer box")
    if kind is TaskKind.TEMPORAL_GROUNDING and gt.answer_interval is None:
        raise MissingGroundTruth("temporal grounding sample has no answer interval")
    try:
        extracted = extract_answer(trace, kind, options=cfg.mcq_options)
    except NoAnswerFound:
        return 0.0
    if kind is TaskKind.MCQ:
        return 1.0 if extracted == gt.answer.strip().upper() else 0.0
    if kind is TaskKind.OPEN_ENDED:
        return rouge_l_f1(extracted, gt.answer)
    if kind is TaskKind.SPATIAL_GROUNDING:
        return box_iou(extracted, gt.answer_box)
    return interval_iou(extracted, gt.answer_interval)


def format_reward(trace: ParsedTrace) -> float:
    return 1.0 if trace.format_ok else 0.0


def temporal_reward(trace: ParsedTrace, gt: TemporalAnnotation, cfg: RewardConfig = DEFAULT_REWARDS) -> float:
    """Mean per-timestamp closeness.

    A timestamp inside any annotated interval scores 1; otherwise it scores
    exp(-dt^2 / (2 sigma^2)) against the nearest annotated position. A trace
    with no timestamps scores 0.
    """
    ts = trace.timestamps(include_bare=cfg.include_bare_timestamps)
    if not ts:
        return 0.0
    if not gt.positions:
        raise EmptyGroundTruth("temporal annotation has no positions")
    scores = []
    for t in ts:
        if gt.covers(t):
            scores.append(1.0)
        else:
            _, dt = match_timestamp(t, gt)
            scores.append(math.exp(-(dt * dt) / (2.0 * cfg.sigma * cfg.sigma)))
    return sum(scores) / len(scores)


def _lookup_keyframe(keyframes, t: float) -> KeyframeObjects | None:
    best = None
    best_dt = 1e-6
    for kf in keyframes:
        dt = abs(kf.timestamp - t)
        if dt <= best_dt:
            best, best_dt = kf, dt
    return best


def _object_boxes_max_iou(box: BoundingBox, boxes) -> float:
    return max((box_iou(box, b) for b in boxes), default=0.0)


def spatial_reward(
    trace: ParsedTrace,
    keyframes,
    gt_temporal: TemporalAnnotation,
    cfg: RewardConfig = DEFAULT_REWARDS,
) -> float:
    """Spatial quality of grounding claims in [0, 1].

    Every claim is matched to its nearest annotated position; claims farther
    than tau (or whose matched keyframe has no object record) earn nothing.

    object_aware: only claims whose name soft-matches some keyframe object
    count; each scores the mean over its matched objects of the best IoU
    against that object's boxes, and the reward averages over counted claims.
    max_iou: each claim scores its best IoU against every box at the frame;
    averages over all claims. avg_iou: each claim scores the mean over the
    frame's objects of the per-object best IoU; averages over all claims.
    """
    tuples = trace.tuples
    if not tuples:
        return 0.0
    if not gt_temporal.positions:
        raise EmptyGroundTruth("temporal annotation has no positions")
    gated: list[float] = []  # per-claim contribution for max/avg modes
    counted: list[float] = []  # contributions of claims inside the valid set
    for g in tuples:
        t_match, dt = match_timestamp(g.timestamp, gt_temporal)
        kf = _lookup_keyframe(keyframes, t_match)
        if dt > cfg.tau or kf is None or not kf.objects:
            gated.append(0.0)
            continue
        if cfg.spatial_mode is SpatialMode.MAX_IOU:
            gated.append(_object_boxes_max_iou(g.box, kf.all_boxes()))
        elif cfg.spatial_mode is SpatialMode.AVG_IOU:
            per_object = [_object_boxes_max_iou(g.box, boxes) for _, boxes in kf.objects]
            gated.append(sum(per_object) / len(per_object))
        else:
            matched = [
                (name, boxes)
                for name, boxes in kf.objects
                if soft_identity_match(g.name, name, cfg.match)
            ]
            if not matched:
                gated.append(0.0)
                continue
            if cfg.match_all_frame_boxes:
                frame_boxes = kf.all_boxes()
                scores = [_object_boxes_max_iou(g.box, frame_boxes) for _ in matched]
            else:
                scores = [_object_boxes_max_iou(g.box, boxes) for _, boxes in matched]
            counted.append(sum(scores) / len(scores))
    if cfg.spatial_mode is SpatialMode.OBJECT_AWARE:
        if not counted:
            return 0.0
        return sum(counted) / len(counted)
    return sum(gated) / len(tuples)


def overall_reward(trace: ParsedTrace, gt: GroundTruthAnnotation, cfg: RewardConfig = DEFAULT_REWARDS) -> RewardBreakdown:
    """Score one trace against one sample's supervision.

    Components whose supervision is absent contribute 0 and are listed in
    the breakdown's `missing` field; errors inside computable components
    propagate.
    """
    acc = accuracy_reward(trace, gt, cfg)
    fmt = format_reward(trace)
    missing: list[str] = []
    temporal = gt.temporal
    if temporal is None or (not temporal.positions and not temporal.intervals):
        tmp = 0.0
        missing.append("tmp")
    else:
        tmp = temporal_reward(trace, temporal, cfg)
    if temporal is None or not temporal.positions or not gt.keyframes:
        spa = 0.0
        missing.append("spa")
    else:
        spa = spatial_reward(trace, gt.keyframes, temporal, cfg)
    return RewardBreakdown.build(acc, fmt, tmp, spa, cfg.candidate_statistic, tuple(missing))


def group_normalize(rewards) -> list[float]:
    """Center by the group mean and divide by the population std.

    A spread at rounding-noise scale counts as zero and yields all-zero
    advantages; this covers literally identical rewards even when the
    computed mean lands one ulp away from the common value (e.g. groups of
    three), where dividing by the ulp-sized std would amplify float noise
    into unit advantages.
    """
    values = list(rewards)
    if not values:
        return []
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    std = math.sqrt(var)
    if std <= 1e-9 * max(1.0, max(abs(v) for v in values)):
        return [0.0 for _ in values]
    return [(v - mean) / std for v in values]


def count_grounding(trace: ParsedTrace) -> tuple[int, int]:
    """(number of distinct claimed object names, number of box tags)."""
    return len({g.name for g in trace.tuples}), len(trace.tuples)
