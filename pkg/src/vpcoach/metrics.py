"""Chained video-reasoning evaluation metrics.

A chain scores three dimensions in [0, 1]: answer accuracy, mean temporal
IoU, and mean visual IoU. Three aggregates summarize a chain — arithmetic
mean (am), geometric mean (gm), and a log-gain mean (lgm) that rewards
balanced progress and punishes any dimension stuck near 0 — and mam/mlgm
average those across chains. Interval retrieval quality reports
recall@{0.3,0.5,0.7} (strictly greater) and mean IoU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ComponentAtOne, LengthMismatch
from .geometry import interval_iou

LGM_EPSILON = 1e-6
DEFAULT_RECALL_THRESHOLDS = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class ChainScores:
    accuracy: float
    mean_tiou: float
    mean_viou: float

    def components(self) -> tuple[float, float, float]:
        return (self.accuracy, self.mean_tiou, self.mean_viou)


def am(chain: ChainScores) -> float:
    a, t, v = chain.components()
    return (a + t + v) / 3.0


def gm(chain: ChainScores) -> float:
    a, t, v = chain.components()
    return (a * t * v) ** (1.0 / 3.0)


def lgm(chain: ChainScores, epsilon: float = LGM_EPSILON) -> float:
    """-1/3 * sum of log(1 - c + epsilon) over the three components."""
    total = 0.0
    for c in chain.components():
        arg = 1.0 - c + epsilon
        if arg <= 0.0:
            raise ComponentAtOne(f"component {c} exceeds 1 beyond epsilon {epsilon}")
        total += math.log(arg)
    return -total / 3.0


def mam(chains: Sequence[ChainScores]) -> float:
    if not chains:
        raise ValueError("need at least one chain")
    return sum(am(c) for c in chains) / len(chains)


def mlgm(chains: Sequence[ChainScores], epsilon: float = LGM_EPSILON) -> float:
    if not chains:
        raise ValueError("need at least one chain")
    return sum(lgm(c, epsilon) for c in chains) / len(chains)


def recall_at_iou(
    pred_intervals: Sequence[tuple[float, float]],
    gt_intervals: Sequence[tuple[float, float]],
    thresholds: Sequence[float] = DEFAULT_RECALL_THRESHOLDS,
) -> dict[float, float]:
    """Fraction of aligned pairs whose interval IoU strictly exceeds each threshold."""
    if len(pred_intervals) != len(gt_intervals):
        raise LengthMismatch(
            f"{len(pred_intervals)} predictions vs {len(gt_intervals)} ground truths"
        )
    ious = [interval_iou(p, g) for p, g in zip(pred_intervals, gt_intervals)]
    if not ious:
        return {t: 0.0 for t in thresholds}
    return {t: sum(1 for v in ious if v > t) / len(ious) for t in thresholds}


def mean_iou(
    pred_intervals: Sequence[tuple[float, float]],
    gt_intervals: Sequence[tuple[float, float]],
) -> float:
    if len(pred_intervals) != len(gt_intervals):
        raise LengthMismatch(
            f"{len(pred_intervals)} predictions vs {len(gt_intervals)} ground truths"
        )
    if not pred_intervals:
        return 0.0
    ious = [interval_iou(p, g) for p, g in zip(pred_intervals, gt_intervals)]
    return sum(ious) / len(ious)


def chain_report(chains: Sequence[ChainScores], epsilon: float = LGM_EPSILON) -> dict:
    """Per-chain and aggregate scores, everything in [0, 1]."""
    per_chain = [
        {
            "accuracy": c.accuracy,
            "mean_tiou": c.mean_tiou,
            "mean_viou": c.mean_viou,
            "am": am(c),
            "gm": gm(c),
            "lgm": lgm(c, epsilon),
        }
        for c in chains
    ]
    return {
        "chains": per_chain,
        "mam": mam(chains),
        "mlgm": mlgm(chains, epsilon),
    }


def interval_report(
    pred_intervals: Sequence[tuple[float, float]],
    gt_intervals: Sequence[tuple[float, float]],
    thresholds: Sequence[float] = DEFAULT_RECALL_THRESHOLDS,
) -> dict:
    recalls = recall_at_iou(pred_intervals, gt_intervals, thresholds)
    return {
        "count": len(pred_intervals),
        "recall": {f"{t:g}": recalls[t] for t in thresholds},
        "mean_iou": mean_iou(pred_intervals, gt_intervals),
    }
