"""Grounded reasoning trace grammar: parsing, canonical rendering, answer extraction.

A trace is `<think>...</think><answer>...</answer>` whose body may embed
grounding claims of the canonical form

    <obj>NAME</obj><box>[x1, y1, x2, y2]</box>at<t>TIME</t>s

The parser is total: any string yields a ParsedTrace, with format_ok
recording whether the text satisfied the grammar. Tolerated deviations that
keep format_ok true: whitespace inside the box bracket and around "at", int
or float coordinates, timestamps written "12", "12.5", or "12.5s".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import NoAnswerFound
from .geometry import NORMALIZED, BoundingBox, BoxConvention, canonical_box

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)"

_TUPLE_RE = re.compile(
    rf"<obj>\s*(?P<name>[^<>]+?)\s*</obj>\s*"
    rf"<box>\s*\[\s*(?P<x1>{_NUM})\s*,\s*(?P<y1>{_NUM})\s*,\s*(?P<x2>{_NUM})\s*,\s*(?P<y2>{_NUM})\s*\]\s*</box>\s*"
    rf"(?:at)?\s*<t>\s*(?P<t>{_NUM})\s*s?\s*</t>\s*s?",
    re.DOTALL,
)
_T_RE = re.compile(rf"<t>\s*({_NUM})\s*s?\s*</t>", re.DOTALL)
_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)

_GROUNDING_LITERALS = ("<obj>", "</obj>", "<box>", "</box>", "<t>", "</t>")


class TaskKind(str, Enum):
    MCQ = "mcq"
    OPEN_ENDED = "open_ended"
    SPATIAL_GROUNDING = "spatial_grounding"
    TEMPORAL_GROUNDING = "temporal_grounding"


@dataclass(frozen=True)
class GroundedTuple:
    """One grounding claim: object name, normalized box, timestamp in seconds."""

    name: str
    timestamp: float
    box: BoundingBox


@dataclass(frozen=True)
class ParsedTrace:
    think_text: str
    answer_text: str
    tuples: tuple[GroundedTuple, ...]
    bare_timestamps: tuple[float, ...]
    format_ok: bool
    convention: BoxConvention = NORMALIZED
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def timestamps(self, include_bare: bool = True) -> list[float]:
        """All claimed timestamps in document order (tuples first, then bare)."""
        ts = [g.timestamp for g in self.tuples]
        if include_bare:
            ts.extend(self.bare_timestamps)
        return ts


def _structure(text: str) -> tuple[bool, str, str]:
    """Locate the think/answer blocks; ok iff exactly one of each, in order."""
    counts = [text.count(tag) for tag in ("<think>", "</think>", "<answer>", "</answer>")]
    if counts == [1, 1, 1, 1]:
        i_to = text.find("<think>")
        i_tc = text.find("</think>")
        i_ao = text.find("<answer>")
        i_ac = text.find("</answer>")
        if i_to < i_tc < i_ao < i_ac:
            return True, text[i_to + 7 : i_tc], text[i_ao + 8 : i_ac]
    think = _THINK_RE.search(text)
    answer = _ANSWER_RE.search(text)
    return False, think.group(1) if think else "", answer.group(1) if answer else ""


def _scan_segment(seg: str, convention: BoxConvention, diagnostics: list[str]) -> tuple[list[GroundedTuple], list[float], bool]:
    """Extract grounding claims from one block body.

    Returns (tuples, bare timestamps, clean) where clean is False when any
    grounding tag failed to parse or a value had to be clamped.
    """
    clean = True
    tuples: list[GroundedTuple] = []
    spans: list[tuple[int, int]] = []
    for m in _TUPLE_RE.finditer(seg):
        raw = tuple(float(m.group(k)) for k in ("x1", "y1", "x2", "y2"))
        box, clamped, swapped = canonical_box(*convention.to_unit(*raw))
        if clamped:
            clean = False
            diagnostics.append(f"box {list(raw)} clamped to {box.as_list()}")
        if swapped:
            diagnostics.append(f"degenerate box {list(raw)} auto-swapped")
        t = float(m.group("t"))
        if t < 0:
            clean = False
            diagnostics.append(f"negative timestamp {t} clamped to 0")
            t = 0.0
        tuples.append(GroundedTuple(m.group("name").strip(), t, box))
        spans.append(m.span())
    bare: list[float] = []
    consumed = {lit: len(tuples) for lit in _GROUNDING_LITERALS}
    for m in _T_RE.finditer(seg):
        if any(s <= m.start() and m.end() <= e for s, e in spans):
            continue
        t = float(m.group(1))
        if t < 0:
            clean = False
            diagnostics.append(f"negative timestamp {t} clamped to 0")
            t = 0.0
        bare.append(t)
        consumed["<t>"] += 1
        consumed["</t>"] += 1
    for lit in _GROUNDING_LITERALS:
        if seg.count(lit) != consumed[lit]:
            clean = False
            diagnostics.append(f"malformed grounding markup around {lit}")
    return tuples, bare, clean


def parse_trace(text: str, convention: BoxConvention = NORMALIZED) -> ParsedTrace:
    """Parse any string into a ParsedTrace. Total; never raises.

    Box coordinates are rescaled to [0, 1] through `convention`, clamped into
    range (clamping that moves a value more than 1e-6 fails the format), and
    flipped corners are auto-swapped with a diagnostic. Grounding tags are
    read from inside the think/answer blocks; when no block parses at all the
    whole text is scanned as a fallback.
    """
    structure_ok, think_body, answer_body = _structure(text)
    if structure_ok or think_body or answer_body:
        segments = [think_body, answer_body]
    else:
        segments = [text]
    diagnostics: list[str] = []
    tuples: list[GroundedTuple] = []
    bare: list[float] = []
    clean = True
    for seg in segments:
        seg_tuples, seg_bare, seg_clean = _scan_segment(seg, convention, diagnostics)
        tuples.extend(seg_tuples)
        bare.extend(seg_bare)
        clean = clean and seg_clean
    return ParsedTrace(
        think_text=think_body.strip(),
        answer_text=answer_body.strip(),
        tuples=tuple(tuples),
        bare_timestamps=tuple(bare),
        format_ok=structure_ok and clean,
        convention=convention,
        diagnostics=tuple(diagnostics),
    )


def render_trace(trace: ParsedTrace) -> str:
    """Serialize back to canonical tag text.

    For a format_ok trace, re-parsing the result under the same convention
    reproduces the trace (grounding tags live verbatim in the block bodies).
    """
    return f"<think>{trace.think_text}</think><answer>{trace.answer_text}</answer>"


_BRACKET_BOX_RE = re.compile(
    rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\]"
)
_BRACKET_INTERVAL_RE = re.compile(rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*\]")
_UNITS = r"(?:seconds?|secs?|s\b)?"
_SPAN_INTERVAL_RE = re.compile(
    rf"({_NUM})\s*{_UNITS}\s*(?:to|through|until|[-–~])\s*({_NUM})\s*{_UNITS}"
)


def extract_answer(
    trace: ParsedTrace,
    task_kind: TaskKind,
    options: str = "ABCDE",
):
    """Pull the task-specific answer out of answer_text.

    MCQ -> first standalone option letter; OpenEnded -> the raw answer text;
    SpatialGrounding -> first bracketed box (scaled by the trace's
    convention); TemporalGrounding -> first [start, end] interval, written as
    a bracket pair, a "X to Y" phrase, or two timestamp tags. Raises
    NoAnswerFound when nothing extractable is present.
    """
    text = trace.answer_text
    if task_kind is TaskKind.MCQ:
        m = re.search(rf"\b([{re.escape(options)}])\b", text)
        if not m:
            raise NoAnswerFound(f"no option letter in {text!r}")
        return m.group(1)
    if task_kind is TaskKind.OPEN_ENDED:
        if not text.strip():
            raise NoAnswerFound("empty answer text")
        return text
    if task_kind is TaskKind.SPATIAL_GROUNDING:
        m = _BRACKET_BOX_RE.search(text)
        if not m:
            raise NoAnswerFound(f"no box in {text!r}")
        raw = tuple(float(g) for g in m.groups())
        box, _, _ = canonical_box(*trace.convention.to_unit(*raw))
        return box
    if task_kind is TaskKind.TEMPORAL_GROUNDING:
        candidates: list[tuple[int, float, float]] = []
        m = _BRACKET_INTERVAL_RE.search(text)
        if m:
            candidates.append((m.start(), float(m.group(1)), float(m.group(2))))
        m = _SPAN_INTERVAL_RE.search(text)
        if m:
            candidates.append((m.start(), float(m.group(1)), float(m.group(2))))
        tags = _T_RE.findall(text)
        if len(tags) >= 2:
            candidates.append((len(text), float(tags[0]), float(tags[1])))
        if not candidates:
            raise NoAnswerFound(f"no interval in {text!r}")
        _, s, e = min(candidates, key=lambda c: c[0])
        return (s, e) if s <= e else (e, s)
    raise ValueError(f"unknown task kind: {task_kind!r}")
