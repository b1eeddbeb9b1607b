"""Pseudo-label construction for selector training data.

Each video question is answered by several reasoners under every prompt
kind; per kind we aggregate an answer score A and a grounding score G, then
pick the kind that earns the sample's label. The default procedure filters
to kinds every reasoner answered correctly and ranks those by grounding;
when nothing survives the filter (and as an explicit alternative mode) the
label is argmax of A + G. Score ties go to the least-invasive kind.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import NoAnswerFound, NoCandidates
from .geometry import BoundingBox, box_iou
from .matching import DEFAULT_MATCH, MatchConfig, hierarchical_similarity, rouge_l_f1
from .prompts import KIND_TIE_ORDER, PromptKind
from .trace import ParsedTrace, TaskKind, extract_answer

_TIE_RANK = {kind: i for i, kind in enumerate(KIND_TIE_ORDER)}


class SelectionMode(str, Enum):
    FILTER_THEN_RANK = "filter_then_rank"
    ARGMAX_AG = "argmax_ag"


@dataclass(frozen=True)
class LabelGroundTruth:
    """Supervision for pseudo-labeling one sample.

    options non-empty means multiple-choice (binary answer scores); empty
    means open-ended (ROUGE-L answer scores). boxes are (name, box) pairs
    pooled over the annotated keyframes.
    """

    answer: str
    options: str = ""
    boxes: tuple[tuple[str, BoundingBox], ...] = ()


@dataclass(frozen=True)
class ReasonerScore:
    answer: float
    spatial_iou: float
    object_match: float

    @property
    def grounding(self) -> float:
        return (self.spatial_iou + self.object_match) / 2.0


@dataclass(frozen=True)
class CandidateScore:
    kind: PromptKind
    answer_mean: float
    grounding_mean: float
    per_reasoner: tuple[ReasonerScore, ...]


def _answer_score(trace: ParsedTrace, gt: LabelGroundTruth) -> float:
    try:
        if gt.options:
            letter = extract_answer(trace, TaskKind.MCQ, options=gt.options)
            return 1.0 if letter == gt.answer.strip().upper() else 0.0
        text = extract_answer(trace, TaskKind.OPEN_ENDED)
        return rouge_l_f1(text, gt.answer)
    except NoAnswerFound:
        return 0.0


def _spatial_score(trace: ParsedTrace, gt: LabelGroundTruth) -> float:
    if not trace.tuples or not gt.boxes:
        return 0.0
    best = [max(box_iou(g.box, b) for _, b in gt.boxes) for g in trace.tuples]
    return sum(best) / len(best)


def _object_score(trace: ParsedTrace, gt: LabelGroundTruth, match: MatchConfig) -> float:
    names = list(dict.fromkeys(g.name for g in trace.tuples))
    gt_names = list(dict.fromkeys(name for name, _ in gt.boxes))
    if not names or not gt_names:
        return 0.0
    best = [max(hierarchical_similarity(n, g, match) for g in gt_names) for n in names]
    return sum(best) / len(best)


def score_candidate(
    kind: PromptKind,
    reasoner_traces: Sequence[ParsedTrace],
    gt: LabelGroundTruth,
    match: MatchConfig = DEFAULT_MATCH,
) -> CandidateScore:
    """Aggregate one prompt kind's reasoner outputs into (A, G) scores.

    A averages per-reasoner answer scores; G averages per-reasoner grounding
    scores, each the mean of that reasoner's spatial IoU (best-box IoU per
    claim) and object match (best hierarchical similarity per distinct
    claimed name). A reasoner with no grounding claims contributes 0 to both
    grounding parts.
    """
    if not reasoner_traces:
        raise ValueError("at least one reasoner output required")
    scores = tuple(
        ReasonerScore(
            answer=_answer_score(t, gt),
            spatial_iou=_spatial_score(t, gt),
            object_match=_object_score(t, gt, match),
        )
        for t in reasoner_traces
    )
    answer_mean = sum(s.answer for s in scores) / len(scores)
    grounding_mean = sum(s.grounding for s in scores) / len(scores)
    return CandidateScore(kind, answer_mean, grounding_mean, scores)


def select_pseudo_label(
    candidates: Sequence[CandidateScore],
    mode: SelectionMode = SelectionMode.FILTER_THEN_RANK,
    correct_threshold: float = 0.5,
) -> PromptKind:
    """Pick the prompt kind that labels this sample.

    filter_then_rank keeps kinds where every reasoner's answer score clears
    correct_threshold (binary scores make this "all correct") and returns
    the best grounding mean among them, falling back to argmax_ag when the
    filter empties. argmax_ag maximizes A + G outright. Ties prefer the
    least-invasive kind (raw first).
    """
    if not candidates:
        raise NoCandidates("no candidate scores to choose from")

    def rank(c: CandidateScore) -> int:
        return _TIE_RANK.get(c.kind, len(KIND_TIE_ORDER))

    if mode is SelectionMode.FILTER_THEN_RANK:
        kept = [
            c for c in candidates if all(r.answer >= correct_threshold for r in c.per_reasoner)
        ]
        if kept:
            return min(kept, key=lambda c: (-c.grounding_mean, rank(c))).kind
    return min(candidates, key=lambda c: (-(c.answer_mean + c.grounding_mean), rank(c))).kind


def label_distribution(labels: Sequence[PromptKind]) -> dict[str, dict]:
    """Counts and percentages per kind, least-invasive kinds first."""
    counts = Counter(labels)
    total = sum(counts.values())
    if total == 0:
        return {}
    ordered = [k for k in KIND_TIE_ORDER if k in counts]
    ordered.extend(k for k in counts if k not in _TIE_RANK)
    return {
        k.value: {"count": counts[k], "pct": 100.0 * counts[k] / total} for k in ordered
    }
