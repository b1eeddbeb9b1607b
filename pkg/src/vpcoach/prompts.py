"""Visual prompt rendering: which pixels to touch and what hint to append.

Five prompt kinds, serialized by the lowercase wire tokens used everywhere
(selector labels, directives, CLI flags):

  raw         identity (no pixels touched, no hint)
  circle      red ellipse outlines around key-object boxes on keyframes
  darken      keep key-object boxes bright, darken everything else on keyframes
  numpro      1-based frame numbers painted on every sampled frame
  api_prompt  relevance-map heat overlay blended onto keyframes

All frame operations take and return uint8 RGB arrays of shape (H, W, 3),
never resize, and are deterministic for fixed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .errors import EmptyVideo, MissingBoxes, MissingRelevanceProvider
from .geometry import BoundingBox


class PromptKind(str, Enum):
    RAW = "raw"
    CIRCLE = "circle"
    DARKEN = "darken"
    NUMBER = "numpro"
    ATTENTION = "api_prompt"


# Least-invasive-first ordering used to break score ties in label selection.
KIND_TIE_ORDER: tuple[PromptKind, ...] = (
    PromptKind.RAW,
    PromptKind.NUMBER,
    PromptKind.CIRCLE,
    PromptKind.DARKEN,
    PromptKind.ATTENTION,
)

DEFAULT_HINTS: dict[PromptKind, str] = {
    PromptKind.CIRCLE: "Key objects in the key frames are outlined with red circles; use them to locate the relevant evidence.",
    PromptKind.DARKEN: "Everything outside the key regions of the key frames has been darkened; focus on the bright regions.",
    PromptKind.NUMBER: "Each frame is labeled with its frame number in the bottom-right corner, with key frame numbers in red; use them to reference moments in time.",
    PromptKind.ATTENTION: "A heat overlay marks question-relevant regions in the key frames; attend to the highlighted areas.",
}


def load_hint_templates(path: str | Path) -> dict[PromptKind, str]:
    """Read `kind = hint text` lines; '#' starts a comment, blanks ignored."""
    hints = dict(DEFAULT_HINTS)
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'kind = hint'")
        key, _, value = line.partition("=")
        kind = PromptKind(key.strip())
        if kind is PromptKind.RAW:
            raise ValueError(f"{path}:{lineno}: raw takes no hint")
        hints[kind] = value.strip()
    return hints


def load_frame(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_frame(frame: np.ndarray, path: str | Path) -> None:
    Image.fromarray(frame, mode="RGB").save(path)


def uniform_sample_indices(length: int, n: int = 16) -> list[int]:
    """Positions floor(i * length / n); shorter videos keep every frame and
    pad with the last one."""
    if length <= 0:
        raise EmptyVideo("no frames to sample")
    if n <= 0:
        raise ValueError("n must be positive")
    if length < n:
        return list(range(length)) + [length - 1] * (n - length)
    return [i * length // n for i in range(n)]


def uniform_sample_frames(frames: Sequence, n: int = 16) -> list:
    return [frames[i] for i in uniform_sample_indices(len(frames), n)]


def _as_pixel_rect(box: BoundingBox, w: int, h: int) -> tuple[int, int, int, int]:
    x1 = min(w, max(0, round(box.x1 * w)))
    x2 = min(w, max(0, round(box.x2 * w)))
    y1 = min(h, max(0, round(box.y1 * h)))
    y2 = min(h, max(0, round(box.y2 * h)))
    return x1, y1, x2, y2


def apply_red_circle(frame: np.ndarray, boxes: Sequence[BoundingBox]) -> np.ndarray:
    """Outline each box with a pure-red ellipse.

    The ellipse is centered on the box with semi-axes 10% larger than the
    half-extents (0.55 * width/height); stroke width is max(2px, 0.4% of the
    frame diagonal). Ellipses running off the edge are clipped.
    """
    h, w = frame.shape[:2]
    stroke = max(2, round(0.004 * math.hypot(w, h)))
    img = Image.fromarray(frame, mode="RGB")
    draw = ImageDraw.Draw(img)
    for box in boxes:
        cx, cy = (box.x1 + box.x2) / 2 * w, (box.y1 + box.y2) / 2 * h
        sx, sy = 0.55 * (box.x2 - box.x1) * w, 0.55 * (box.y2 - box.y1) * h
        draw.ellipse((cx - sx, cy - sy, cx + sx, cy + sy), outline=(255, 0, 0), width=stroke)
    return np.asarray(img, dtype=np.uint8)


def apply_darken(frame: np.ndarray, boxes: Sequence[BoundingBox], factor: float = 0.3) -> np.ndarray:
    """Scale pixels outside the box union by `factor` (rounded); boxes stay intact."""
    if not 0.0 <= factor <= 1.0:
        raise ValueError("factor must be in [0, 1]")
    h, w = frame.shape[:2]
    out = np.round(frame.astype(np.float64) * factor).astype(np.uint8)
    for box in boxes:
        x1, y1, x2, y2 = _as_pixel_rect(box, w, h)
        out[y1:y2, x1:x2] = frame[y1:y2, x1:x2]
    return out


_DIGIT_ROWS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "001", "001", "001"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}


def _label_mask(label: str, scale: int) -> np.ndarray:
    cells = np.zeros((5, 4 * len(label) - 1), dtype=bool)
    for k, ch in enumerate(label):
        for r, row in enumerate(_DIGIT_ROWS[ch]):
            for c, bit in enumerate(row):
                if bit == "1":
                    cells[r, 4 * k + c] = True
    return np.kron(cells, np.ones((scale, scale), dtype=bool))


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    padded = np.pad(mask, radius)
    out = np.zeros_like(padded)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            out |= np.roll(np.roll(padded, dy, axis=0), dx, axis=1)
    return out


def _stamp(frame: np.ndarray, mask: np.ndarray, y0: int, x0: int, color: tuple[int, int, int]) -> None:
    h, w = frame.shape[:2]
    mh, mw = mask.shape
    y1, x1 = min(h, y0 + mh), min(w, x0 + mw)
    y0c, x0c = max(0, y0), max(0, x0)
    sub = mask[y0c - y0 : y1 - y0, x0c - x0 : x1 - x0]
    frame[y0c:y1, x0c:x1][sub] = color


def apply_frame_numbers(frames: Sequence[np.ndarray], keyframe_indices: Sequence[int] = ()) -> list[np.ndarray]:
    """Paint 1-based frame numbers in the bottom-right corner of every frame.

    Keyframe labels are red; the rest are white with a black outline. Glyph
    height is 6% of the frame height, from a built-in bitmap digit font so
    rendering is identical everywhere.
    """
    key = set(keyframe_indices)
    out = []
    for i, frame in enumerate(frames):
        h, w = frame.shape[:2]
        scale = max(1, round(0.06 * h / 5))
        mask = _label_mask(str(i + 1), scale)
        margin = max(scale, round(0.02 * min(w, h)))
        y0 = max(0, h - margin - mask.shape[0])
        x0 = max(0, w - margin - mask.shape[1])
        painted = frame.copy()
        if i in key:
            _stamp(painted, mask, y0, x0, (255, 0, 0))
        else:
            radius = max(1, scale // 2)
            outline = _dilate(mask, radius)
            _stamp(painted, outline, y0 - radius, x0 - radius, (0, 0, 0))
            _stamp(painted, mask, y0, x0, (255, 255, 255))
        out.append(painted)
    return out


def _bilinear_upsample(grid: np.ndarray, h: int, w: int) -> np.ndarray:
    gh, gw = grid.shape
    ys = (np.arange(h) + 0.5) * gh / h - 0.5
    xs = (np.arange(w) + 0.5) * gw / w - 0.5
    y0f, x0f = np.floor(ys), np.floor(xs)
    fy, fx = ys - y0f, xs - x0f
    y0 = np.clip(y0f.astype(int), 0, gh - 1)
    y1 = np.clip(y0f.astype(int) + 1, 0, gh - 1)
    x0 = np.clip(x0f.astype(int), 0, gw - 1)
    x1 = np.clip(x0f.astype(int) + 1, 0, gw - 1)
    fy = fy[:, None]
    fx = fx[None, :]
    return (
        grid[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + grid[np.ix_(y0, x1)] * (1 - fy) * fx
        + grid[np.ix_(y1, x0)] * fy * (1 - fx)
        + grid[np.ix_(y1, x1)] * fy * fx
    )


def _heat_rgb(v: np.ndarray) -> np.ndarray:
    r = np.clip(3 * v, 0, 1)
    g = np.clip(3 * v - 1, 0, 1)
    b = np.clip(3 * v - 2, 0, 1)
    return np.stack([r, g, b], axis=-1)


def apply_attention_overlay(frame: np.ndarray, relevance: np.ndarray) -> np.ndarray:
    """Blend a heat-colored, bilinearly upsampled relevance grid over the frame.

    The grid is min-max normalized first; a constant grid carries no signal
    and returns the frame unchanged. Blend weight is 0.5.
    """
    rel = np.asarray(relevance, dtype=np.float64)
    if rel.ndim != 2 or rel.size == 0:
        raise ValueError("relevance must be a non-empty 2-D grid")
    lo, hi = float(rel.min()), float(rel.max())
    if hi - lo == 0.0:
        return frame.copy()
    norm = (rel - lo) / (hi - lo)
    h, w = frame.shape[:2]
    heat = _heat_rgb(_bilinear_upsample(norm, h, w))
    blended = 0.5 * frame.astype(np.float64) + 0.5 * 255.0 * heat
    return np.round(blended).astype(np.uint8)


class RelevanceProvider(Protocol):
    def grid_for(self, frame_index: int) -> np.ndarray: ...


def load_relevance_grid(path: str | Path) -> np.ndarray:
    """Read one relevance grid.

    `.npy` files load as-is; anything else is the text format: a header line
    `ROWS COLS` followed by ROWS whitespace-separated float rows ('#' lines
    ignored).
    """
    path = Path(path)
    if path.suffix == ".npy":
        grid = np.load(path)
    else:
        lines = [
            ln.strip()
            for ln in path.read_text().splitlines()
            if ln.strip() and not ln.strip().startswith("#")
        ]
        if not lines:
            raise ValueError(f"{path}: empty relevance file")
        dims = lines[0].split()
        if len(dims) != 2:
            raise ValueError(f"{path}: header must be 'ROWS COLS'")
        rows, cols = int(dims[0]), int(dims[1])
        if len(lines) - 1 != rows:
            raise ValueError(f"{path}: expected {rows} data rows, found {len(lines) - 1}")
        grid = np.array([[float(v) for v in ln.split()] for ln in lines[1:]], dtype=np.float64)
        if grid.shape != (rows, cols):
            raise ValueError(f"{path}: declared {rows}x{cols}, parsed {grid.shape}")
    if grid.ndim != 2:
        raise ValueError(f"{path}: relevance grid must be 2-D")
    return np.asarray(grid, dtype=np.float64)


@dataclass(frozen=True)
class FileRelevanceProvider:
    """Grids from disk: a single file serves every frame; a directory serves
    `<index>.txt` / `<index>.npy` per frame."""

    path: str | Path

    def grid_for(self, frame_index: int) -> np.ndarray:
        root = Path(self.path)
        if root.is_dir():
            for suffix in (".txt", ".npy"):
                candidate = root / f"{frame_index}{suffix}"
                if candidate.exists():
                    return load_relevance_grid(candidate)
            raise MissingRelevanceProvider(f"no grid for frame {frame_index} under {root}")
        return load_relevance_grid(root)


@dataclass(frozen=True)
class GaussianBumpProvider:
    """Synthetic single-bump grid; handy for demos and tests."""

    rows: int = 8
    cols: int = 8
    center_y: float = 0.5
    center_x: float = 0.5
    width: float = 0.2

    def grid_for(self, frame_index: int) -> np.ndarray:
        ys = (np.arange(self.rows) + 0.5) / self.rows
        xs = (np.arange(self.cols) + 0.5) / self.cols
        dy = (ys - self.center_y)[:, None]
        dx = (xs - self.center_x)[None, :]
        return np.exp(-(dy * dy + dx * dx) / (2 * self.width * self.width))


@dataclass(frozen=True)
class PromptedSample:
    frames: tuple[np.ndarray, ...]
    question: str
    kind: PromptKind
    keyframe_indices: tuple[int, ...]


def _boxes_for_frame(gt_boxes, index: int) -> list[BoundingBox]:
    if isinstance(gt_boxes, Mapping):
        return list(gt_boxes.get(index, ()))
    return list(gt_boxes or ())


def build_prompted_sample(
    frames: Sequence[np.ndarray],
    question: str,
    kind: PromptKind,
    gt_boxes=None,
    keyframes: Sequence[int] = (),
    relevance_provider: RelevanceProvider | None = None,
    hints: Mapping[PromptKind, str] | None = None,
) -> PromptedSample:
    """Render one prompt kind over a sampled frame list and extend the question.

    gt_boxes is either a flat box list (applied to every keyframe) or a
    mapping from frame index to boxes. circle/darken require boxes for at
    least one keyframe; the attention overlay requires a relevance provider.
    Pixel edits touch keyframes only, except frame numbering which labels
    every frame. Frame count and dimensions never change.
    """
    if not frames:
        raise EmptyVideo("no frames to prompt")
    hints = DEFAULT_HINTS if hints is None else hints
    key = sorted(set(int(k) for k in keyframes))
    if any(k < 0 or k >= len(frames) for k in key):
        raise ValueError("keyframe index out of range")
    out = [f.copy() for f in frames]
    if kind in (PromptKind.CIRCLE, PromptKind.DARKEN):
        if not any(_boxes_for_frame(gt_boxes, k) for k in key):
            raise MissingBoxes(f"{kind.value} prompt needs boxes on a keyframe")
        for k in key:
            boxes = _boxes_for_frame(gt_boxes, k)
            if not boxes:
                continue
            out[k] = apply_red_circle(out[k], boxes) if kind is PromptKind.CIRCLE else apply_darken(out[k], boxes)
    elif kind is PromptKind.NUMBER:
        out = apply_frame_numbers(out, key)
    elif kind is PromptKind.ATTENTION:
        if relevance_provider is None:
            raise MissingRelevanceProvider("attention prompt needs a relevance provider")
        for k in key:
            out[k] = apply_attention_overlay(out[k], relevance_provider.grid_for(k))
    question_out = question if kind is PromptKind.RAW else f"{question}\n{hints[kind]}"
    return PromptedSample(tuple(out), question_out, kind, tuple(key))
