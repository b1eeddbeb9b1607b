"""Boxes, intervals, coordinate conventions, and temporal annotations.

All boxes in the library are axis-aligned and live in normalized [0, 1]
image coordinates with x1 <= x2 and y1 <= y2. Raw coordinates arriving in
other conventions are rescaled through a `BoxConvention` before a
`BoundingBox` is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyGroundTruth

_EPS = 1e-9


@dataclass(frozen=True)
class BoundingBox:
    """Normalized axis-aligned box, corners (x1, y1) top-left, (x2, y2) bottom-right."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (-_EPS <= self.x1 <= self.x2 <= 1 + _EPS):
            raise ValueError(f"bad x extent: {self.x1}..{self.x2}")
        if not (-_EPS <= self.y1 <= self.y2 <= 1 + _EPS):
            raise ValueError(f"bad y extent: {self.y1}..{self.y2}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


def clamp_unit(v: float) -> float:
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


def canonical_box(x1: float, y1: float, x2: float, y2: float) -> tuple[BoundingBox, bool, bool]:
    """Clamp to [0,1] and swap flipped corners.

    Returns (box, clamped, swapped) where `clamped` means a coordinate moved
    by more than 1e-6 and `swapped` means corners arrived out of order.
    """
    raw = (x1, y1, x2, y2)
    cx1, cy1, cx2, cy2 = (clamp_unit(v) for v in raw)
    clamped = any(abs(c - r) > 1e-6 for c, r in zip((cx1, cy1, cx2, cy2), raw))
    swapped = cx1 > cx2 or cy1 > cy2
    if cx1 > cx2:
        cx1, cx2 = cx2, cx1
    if cy1 > cy2:
        cy1, cy2 = cy2, cy1
    return BoundingBox(cx1, cy1, cx2, cy2), clamped, swapped


@dataclass(frozen=True)
class BoxConvention:
    """Coordinate convention raw box values are expressed in.

    kind is one of "normalized" (already [0,1]), "int999" (integer grid
    0..999, divided by 999), or "pixel" (divided by the frame width/height
    carried alongside).
    """

    kind: str
    width: float | None = None
    height: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("normalized", "int999", "pixel"):
            raise ValueError(f"unknown convention kind: {self.kind!r}")
        if self.kind == "pixel" and not (self.width and self.height):
            raise ValueError("pixel convention requires width and height")

    @classmethod
    def normalized(cls) -> "BoxConvention":
        return cls("normalized")

    @classmethod
    def integer_0_999(cls) -> "BoxConvention":
        return cls("int999")

    @classmethod
    def pixel(cls, width: float, height: float) -> "BoxConvention":
        return cls("pixel", width, height)

    def to_unit(self, x1: float, y1: float, x2: float, y2: float) -> tuple[float, float, float, float]:
        """Rescale a raw box into normalized coordinates (no clamping here)."""
        if self.kind == "normalized":
            return x1, y1, x2, y2
        if self.kind == "int999":
            return x1 / 999.0, y1 / 999.0, x2 / 999.0, y2 / 999.0
        return x1 / self.width, y1 / self.height, x2 / self.width, y2 / self.height


NORMALIZED = BoxConvention.normalized()
INT999 = BoxConvention.integer_0_999()


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two normalized boxes.

    Degenerate (zero-area) boxes score 0 against everything, themselves
    included: the union of two identical degenerate boxes is 0, and the
    zero-union guard returns 0.
    """
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def interval_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    """1-D IoU of two [start, end] intervals; zero-length union scores 0."""
    s1, e1 = a
    s2, e2 = b
    inter = max(0.0, min(e1, e2) - max(s1, s2))
    union = (e1 - s1) + (e2 - s2) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class KeyframeObjects:
    """Ground-truth objects visible at one annotated keyframe.

    objects maps each object name to its boxes at this timestamp; every
    listed object carries at least one box.
    """

    timestamp: float
    objects: tuple[tuple[str, tuple[BoundingBox, ...]], ...]

    def all_boxes(self) -> list[BoundingBox]:
        return [b for _, boxes in self.objects for b in boxes]

    def names(self) -> list[str]:
        return [name for name, _ in self.objects]


@dataclass(frozen=True)
class TemporalAnnotation:
    """Ground-truth temporal supervision: annotated positions and optional intervals."""

    positions: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self) -> None:
        for s, e in self.intervals:
            if s > e:
                raise ValueError(f"interval start after end: [{s}, {e}]")

    def covers(self, t: float) -> bool:
        return any(s <= t <= e for s, e in self.intervals)


def match_timestamp(t: float, gt: TemporalAnnotation) -> tuple[float, float]:
    """Nearest annotated position to t and the distance to it.

    Ties break toward the smaller timestamp. Raises EmptyGroundTruth when the
    annotation has no positions.
    """
    if not gt.positions:
        raise EmptyGroundTruth("temporal annotation has no positions")
    best = min(sorted(gt.positions), key=lambda p: abs(t - p))
    return best, abs(t - best)
