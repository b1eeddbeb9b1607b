"""File formats: dataset JSONL, trace JSONL, config files, canonical JSON.

A dataset file may open with a header record {"schema": "vpcoach/dataset",
"version": 1, "box_convention": ...}; the box convention ("normalized",
"int999", or {"pixel": [w, h]}) applies to every raw box in the file and to
the traces scored against it. Schema or version mismatches are fatal;
individually malformed records are skipped with line-numbered warnings.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .coach import CoachConfig, CoachSample
from .errors import EmptyVideo, SchemaError
from .geometry import (
    NORMALIZED,
    BoundingBox,
    BoxConvention,
    KeyframeObjects,
    TemporalAnnotation,
    canonical_box,
)
from .matching import MatchConfig
from .rewards import CandidateStatistic, GroundTruthAnnotation, RewardConfig, SpatialMode
from .selector_data import SelectionMode
from .trace import TaskKind

DATASET_SCHEMA = "vpcoach/dataset"
LABELS_SCHEMA = "vpcoach/labels"
SCHEMA_VERSION = 1
_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def canonical_json(obj) -> str:
    """Compact, ASCII-safe JSON with insertion-ordered keys; the one
    serialization every JSONL output uses, so files are byte-stable."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def write_jsonl(path, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_json(rec) + "\n")
            count += 1
    return count


def read_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line number, record); raises json.JSONDecodeError per bad line
    only through callers that choose to parse strictly."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            yield lineno, json.loads(line)


def convention_to_json(conv: BoxConvention):
    if conv.kind == "pixel":
        return {"pixel": [conv.width, conv.height]}
    return conv.kind


def parse_convention(value) -> BoxConvention:
    if isinstance(value, str):
        if value in ("normalized", "int999"):
            return BoxConvention(value)
        raise SchemaError(f"unknown box convention {value!r}")
    if isinstance(value, dict) and "pixel" in value:
        w, h = value["pixel"]
        return BoxConvention.pixel(float(w), float(h))
    raise SchemaError(f"unparseable box convention {value!r}")


def _parse_box(raw, convention: BoxConvention) -> BoundingBox:
    x1, y1, x2, y2 = (float(v) for v in raw)
    box, _, _ = canonical_box(*convention.to_unit(x1, y1, x2, y2))
    return box


def _parse_temporal(raw: dict | None) -> TemporalAnnotation | None:
    if raw is None:
        return None
    positions = tuple(float(t) for t in raw.get("positions", ()))
    intervals = tuple(
        (float(s), float(e)) if float(s) <= float(e) else (float(e), float(s))
        for s, e in raw.get("intervals", ())
    )
    if not positions and intervals:
        # Temporal reward needs positions; interval endpoints stand in.
        positions = tuple(sorted({v for pair in intervals for v in pair}))
    return TemporalAnnotation(positions, intervals)


def _parse_keyframes(raw, convention: BoxConvention) -> tuple[KeyframeObjects, ...]:
    out = []
    for kf in raw or ():
        objects = tuple(
            (
                str(obj["name"]),
                tuple(_parse_box(b, convention) for b in obj["boxes"]),
            )
            for obj in kf.get("objects", ())
        )
        out.append(KeyframeObjects(float(kf["t"]), objects))
    return tuple(out)


def parse_ground_truth(raw: dict, task_kind: TaskKind, convention: BoxConvention) -> GroundTruthAnnotation:
    answer = raw.get("answer")
    answer_box = raw.get("answer_box")
    answer_interval = raw.get("answer_interval")
    if answer_interval is not None:
        s, e = (float(v) for v in answer_interval)
        answer_interval = (s, e) if s <= e else (e, s)
    return GroundTruthAnnotation(
        task_kind=task_kind,
        answer=None if answer is None else str(answer),
        answer_box=None if answer_box is None else _parse_box(answer_box, convention),
        answer_interval=answer_interval,
        temporal=_parse_temporal(raw.get("temporal")),
        keyframes=_parse_keyframes(raw.get("keyframes"), convention),
    )


def _frame_paths(rec: dict, base_dir: Path, validate: bool) -> tuple[str, ...]:
    if "frame_paths" in rec:
        return tuple(str(base_dir / p) for p in rec["frame_paths"])
    frame_dir = rec.get("frame_dir")
    if frame_dir is None:
        if validate:
            raise EmptyVideo("record has neither frame_paths nor frame_dir")
        return ()
    directory = base_dir / frame_dir
    if not directory.is_dir():
        if validate:
            raise EmptyVideo(f"frame_dir {directory} does not exist")
        return ()
    paths = sorted(
        str(p) for p in directory.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if validate and not paths:
        raise EmptyVideo(f"frame_dir {directory} holds no images")
    return tuple(paths)


def load_dataset(
    path, validate_frames: bool = False
) -> tuple[list[CoachSample], BoxConvention, list[str]]:
    """Read a dataset file into CoachSamples.

    Returns (samples, box convention, warnings). A malformed record becomes
    one warning and is skipped; a bad header raises SchemaError.
    """
    path = Path(path)
    base_dir = path.parent
    convention = NORMALIZED
    samples: list[CoachSample] = []
    warnings: list[str] = []
    first = True
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                warnings.append(f"{path}:{lineno}: invalid JSON ({err.msg})")
                first = False
                continue
            if first and isinstance(rec, dict) and "schema" in rec:
                first = False
                if rec["schema"] != DATASET_SCHEMA:
                    raise SchemaError(f"{path}: schema {rec['schema']!r} is not {DATASET_SCHEMA!r}")
                if rec.get("version") != SCHEMA_VERSION:
                    raise SchemaError(f"{path}: version {rec.get('version')!r} is not {SCHEMA_VERSION}")
                if "box_convention" in rec:
                    convention = parse_convention(rec["box_convention"])
                continue
            first = False
            try:
                task_kind = TaskKind(rec["task_kind"])
                samples.append(
                    CoachSample(
                        sample_id=str(rec["sample_id"]),
                        frame_paths=_frame_paths(rec, base_dir, validate_frames),
                        question=str(rec.get("question", "")),
                        gt=parse_ground_truth(rec.get("gt", {}), task_kind, convention),
                        convention=convention,
                        fps=float(rec.get("fps", 1.0)),
                    )
                )
            except (KeyError, ValueError, TypeError, EmptyVideo) as err:
                warnings.append(f"{path}:{lineno}: skipped record ({err})")
    return samples, convention, warnings


# --- config files -----------------------------------------------------------

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


def _parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in _TRUTHY:
        return True
    if v in _FALSY:
        return False
    raise SchemaError(f"config key {key}: {value!r} is not a boolean")


def parse_config_file(path) -> dict[str, str]:
    """`key = value` lines; '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def build_configs(kv: dict[str, str]) -> tuple[RewardConfig, CoachConfig, dict]:
    """Turn flat config keys into the reward/coach config objects.

    Returns (reward config, coach config, label options); unknown keys raise
    SchemaError so typos fail loudly.
    """
    match_kw: dict = {}
    reward_kw: dict = {}
    coach_kw: dict = {}
    labels: dict = {"mode": SelectionMode.FILTER_THEN_RANK, "correct_threshold": 0.5}
    for key, value in kv.items():
        try:
            if key == "match.fuzzy_threshold":
                match_kw["fuzzy_threshold"] = float(value)
            elif key == "match.jaccard_threshold":
                match_kw["jaccard_threshold"] = float(value)
            elif key == "match.normalize":
                match_kw["normalize"] = _parse_bool(value, key)
            elif key == "match.substring_score":
                match_kw["substring_score"] = float(value)
            elif key == "match.fuzzy_cap":
                match_kw["fuzzy_cap"] = float(value)
            elif key == "match.jaccard_cap":
                match_kw["jaccard_cap"] = float(value)
            elif key == "reward.sigma":
                reward_kw["sigma"] = float(value)
            elif key == "reward.tau":
                reward_kw["tau"] = float(value)
            elif key == "reward.spatial_mode":
                reward_kw["spatial_mode"] = SpatialMode(value)
            elif key == "reward.candidate_statistic":
                reward_kw["candidate_statistic"] = CandidateStatistic(value)
            elif key == "reward.include_bare_timestamps":
                reward_kw["include_bare_timestamps"] = _parse_bool(value, key)
            elif key == "reward.match_all_frame_boxes":
                reward_kw["match_all_frame_boxes"] = _parse_bool(value, key)
            elif key == "reward.mcq_options":
                reward_kw["mcq_options"] = value
            elif key == "reward.rouge_correct_threshold":
                reward_kw["rouge_correct_threshold"] = float(value)
            elif key == "coach.rollouts":
                coach_kw["rollouts"] = int(value)
            elif key == "coach.hard_threshold":
                coach_kw["hard_threshold"] = float(value)
            elif key == "coach.top_n":
                coach_kw["top_n"] = int(value)
            elif key == "coach.sd_alpha":
                coach_kw["sd_alpha"] = float(value)
            elif key == "coach.advantage_source":
                coach_kw["advantage_source"] = value
            elif key == "coach.frames_per_sample":
                coach_kw["frames_per_sample"] = int(value)
            elif key == "labels.mode":
                labels["mode"] = SelectionMode(value)
            elif key == "labels.correct_threshold":
                labels["correct_threshold"] = float(value)
            else:
                raise SchemaError(f"unknown config key {key!r}")
        except ValueError as err:
            raise SchemaError(f"config key {key}: {err}") from err
    if match_kw:
        reward_kw["match"] = MatchConfig(**match_kw)
    reward = RewardConfig(**reward_kw)
    coach = CoachConfig(reward=reward, **coach_kw)
    return reward, coach, labels


def load_configs(path=None) -> tuple[RewardConfig, CoachConfig, dict]:
    if path is None:
        return build_configs({})
    return build_configs(parse_config_file(path))
