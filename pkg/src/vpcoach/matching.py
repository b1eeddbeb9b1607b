"""String similarity for object names and free-form answers."""

from __future__ import annotations

import re
from dataclasses import dataclass

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class MatchConfig:
    """Knobs for name matching.

    Thresholds gate the fuzzy and token-set tiers of hierarchical_similarity;
    caps bound what each lower tier can score so the tier order stays
    monotone (1.0 >= substring >= fuzzy cap >= jaccard cap). normalize
    controls case folding / whitespace collapsing before any comparison.
    """

    fuzzy_threshold: float = 0.8
    jaccard_threshold: float = 0.5
    normalize: bool = True
    substring_score: float = 0.9
    fuzzy_cap: float = 0.85
    jaccard_cap: float = 0.7

    def __post_init__(self) -> None:
        if not 1.0 >= self.substring_score >= self.fuzzy_cap >= self.jaccard_cap >= 0.0:
            raise ValueError("tier caps must be monotone: 1 >= substring >= fuzzy >= jaccard >= 0")


DEFAULT_MATCH = MatchConfig()


def normalize_name(s: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return _WS.sub(" ", s.strip().lower())


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance (insert/delete/substitute, unit costs)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def edit_similarity(a: str, b: str) -> float:
    """1 - editdist / max(len); 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def token_jaccard(a: str, b: str) -> float:
    ta, tb = set(a.split()), set(b.split())
    if not ta and not tb:
        return 0.0
    union = ta | tb
    return len(ta & tb) / len(union)


def soft_identity_match(pred: str, gt: str, cfg: MatchConfig = DEFAULT_MATCH) -> bool:
    """True when the names match exactly or one contains the other.

    Comparison happens on normalized strings unless cfg.normalize is off.
    Empty strings never match anything.
    """
    if cfg.normalize:
        pred, gt = normalize_name(pred), normalize_name(gt)
    if not pred or not gt:
        return False
    return pred == gt or pred in gt or gt in pred


def hierarchical_similarity(pred: str, gt: str, cfg: MatchConfig = DEFAULT_MATCH) -> float:
    """Tiered name similarity in [0, 1].

    exact -> 1.0; substring either way -> substring_score; else edit
    similarity if it clears fuzzy_threshold (capped at fuzzy_cap); else
    token-set Jaccard if it clears jaccard_threshold (capped at
    jaccard_cap); else 0.
    """
    if cfg.normalize:
        pred, gt = normalize_name(pred), normalize_name(gt)
    if not pred or not gt:
        return 0.0
    if pred == gt:
        return 1.0
    if pred in gt or gt in pred:
        return cfg.substring_score
    fuzzy = edit_similarity(pred, gt)
    if fuzzy >= cfg.fuzzy_threshold:
        return min(fuzzy, cfg.fuzzy_cap)
    jac = token_jaccard(pred, gt)
    if jac >= cfg.jaccard_threshold:
        return min(jac, cfg.jaccard_cap)
    return 0.0


def _lcs_len(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_f1(pred: str, ref: str) -> float:
    """ROUGE-L F1 over case-folded whitespace tokens, no stemming.

    Identical non-empty strings score 1.0; an empty side scores 0.
    """
    pt, rt = pred.lower().split(), ref.lower().split()
    if not pt or not rt:
        return 0.0
    lcs = _lcs_len(pt, rt)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(pt), lcs / len(rt)
    return 2 * p * r / (p + r)
