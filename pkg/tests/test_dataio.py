import json

import pytest

from vpcoach.dataio import (
    build_configs,
    canonical_json,
    load_configs,
    load_dataset,
    parse_config_file,
    parse_convention,
    read_jsonl,
    write_jsonl,
)
from vpcoach.errors import SchemaError
from vpcoach.geometry import INT999, NORMALIZED, BoundingBox
from vpcoach.rewards import CandidateStatistic, SpatialMode
from vpcoach.selector_data import SelectionMode
from vpcoach.trace import TaskKind


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


HEADER = {"schema": "vpcoach/dataset", "version": 1, "box_convention": "int999"}


def record(sample_id="s1", **extra):
    rec = {
        "sample_id": sample_id,
        "task_kind": "mcq",
        "question": "Which? A. x B. y",
        "gt": {
            "answer": "A",
            "temporal": {"positions": [2.0]},
            "keyframes": [
                {"t": 2.0, "objects": [{"name": "cat", "boxes": [[99.9, 99.9, 499.5, 499.5]]}]}
            ],
        },
    }
    rec.update(extra)
    return rec


class TestLoadDataset:
    def test_header_sets_convention(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_lines(path, [json.dumps(HEADER), json.dumps(record())])
        samples, convention, warnings = load_dataset(path)
        assert warnings == []
        assert convention == INT999
        assert len(samples) == 1
        s = samples[0]
        assert s.sample_id == "s1"
        assert s.gt.task_kind is TaskKind.MCQ
        box = s.gt.keyframes[0].objects[0][1][0]
        assert box == BoundingBox(0.1, 0.1, 0.5, 0.5)  # int999 -> unit scale

    def test_headerless_defaults_normalized(self, tmp_path):
        path = tmp_path / "data.jsonl"
        rec = record()
        rec["gt"]["keyframes"][0]["objects"][0]["boxes"] = [[0.1, 0.1, 0.5, 0.5]]
        write_lines(path, [json.dumps(rec)])
        samples, convention, _ = load_dataset(path)
        assert convention == NORMALIZED
        assert samples[0].gt.keyframes[0].objects[0][1][0] == BoundingBox(0.1, 0.1, 0.5, 0.5)

    def test_pixel_convention(self, tmp_path):
        path = tmp_path / "data.jsonl"
        header = dict(HEADER, box_convention={"pixel": [640, 480]})
        rec = record()
        rec["gt"]["keyframes"][0]["objects"][0]["boxes"] = [[64, 48, 320, 240]]
        write_lines(path, [json.dumps(header), json.dumps(rec)])
        samples, _, _ = load_dataset(path)
        box = samples[0].gt.keyframes[0].objects[0][1][0]
        assert (box.x1, box.y1, box.x2, box.y2) == pytest.approx((0.1, 0.1, 0.5, 0.5))

    def test_bad_schema_fatal(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_lines(path, [json.dumps({"schema": "other/dataset", "version": 1})])
        with pytest.raises(SchemaError):
            load_dataset(path)

    def test_bad_version_fatal(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_lines(path, [json.dumps(dict(HEADER, version=2))])
        with pytest.raises(SchemaError):
            load_dataset(path)

    def test_malformed_lines_warn_and_skip(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_lines(
            path,
            [
                json.dumps(HEADER),
                "{not json",
                json.dumps(record("ok1")),
                json.dumps({"sample_id": "missing-task-kind"}),
                json.dumps(record("ok2")),
            ],
        )
        samples, _, warnings = load_dataset(path)
        assert [s.sample_id for s in samples] == ["ok1", "ok2"]
        assert len(warnings) == 2
        assert ":2:" in warnings[0] and "invalid JSON" in warnings[0]
        assert ":4:" in warnings[1] and "skipped" in warnings[1]

    def test_positions_derived_from_intervals(self, tmp_path):
        path = tmp_path / "data.jsonl"
        rec = record()
        rec["gt"]["temporal"] = {"intervals": [[8.0, 3.0], [3.0, 5.0]]}
        write_lines(path, [json.dumps(rec)])
        samples, _, warnings = load_dataset(path)
        assert warnings == []
        temporal = samples[0].gt.temporal
        assert temporal.intervals == ((3.0, 8.0), (3.0, 5.0))  # reversed pair swapped
        assert temporal.positions == (3.0, 5.0, 8.0)  # deduped endpoints

    def test_frame_paths_resolved_relative(self, tmp_path):
        path = tmp_path / "data.jsonl"
        rec = record(frame_paths=["frames/0.png", "frames/1.png"])
        write_lines(path, [json.dumps(rec)])
        samples, _, _ = load_dataset(path)
        assert samples[0].frame_paths == (
            str(tmp_path / "frames/0.png"),
            str(tmp_path / "frames/1.png"),
        )

    def test_frame_dir_listing_sorted(self, tmp_path):
        frames = tmp_path / "clip"
        frames.mkdir()
        for name in ("b.png", "a.png", "notes.txt", "c.jpg"):
            (frames / name).write_bytes(b"")
        path = tmp_path / "data.jsonl"
        write_lines(path, [json.dumps(record(frame_dir="clip"))])
        samples, _, _ = load_dataset(path)
        names = [p.rsplit("/", 1)[-1] for p in samples[0].frame_paths]
        assert names == ["a.png", "b.png", "c.jpg"]

    def test_frameless_allowed_without_validation(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_lines(path, [json.dumps(record())])
        samples, _, warnings = load_dataset(path, validate_frames=False)
        assert samples[0].frame_paths == ()
        assert warnings == []

    def test_frameless_warns_when_validating(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_lines(path, [json.dumps(record())])
        samples, _, warnings = load_dataset(path, validate_frames=True)
        assert samples == []
        assert len(warnings) == 1

    def test_answer_interval_swapped(self, tmp_path):
        path = tmp_path / "data.jsonl"
        rec = record()
        rec["task_kind"] = "temporal_grounding"
        rec["gt"] = {"answer_interval": [9.0, 4.0]}
        write_lines(path, [json.dumps(rec)])
        samples, _, _ = load_dataset(path)
        assert samples[0].gt.answer_interval == (4.0, 9.0)


class TestConventionParsing:
    def test_strings(self):
        assert parse_convention("normalized") == NORMALIZED
        assert parse_convention("int999") == INT999

    def test_pixel_dict(self):
        conv = parse_convention({"pixel": [640, 480]})
        assert conv.kind == "pixel" and conv.width == 640.0 and conv.height == 480.0

    def test_unknown_raises(self):
        with pytest.raises(SchemaError):
            parse_convention("percent")
        with pytest.raises(SchemaError):
            parse_convention({"scale": 2})


class TestJsonl:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "out.jsonl"
        records = [{"a": 1, "b": [1.5, "x"]}, {"a": 2}]
        assert write_jsonl(path, records) == 2
        assert [rec for _, rec in read_jsonl(path)] == records

    def test_canonical_json_is_compact_and_stable(self):
        s = canonical_json({"b": 1, "a": [True, None, "é"]})
        assert s == '{"b":1,"a":[true,null,"\\u00e9"]}'
        assert canonical_json(json.loads(s)) == s

    def test_read_skips_blank_lines(self, tmp_path):
        path = tmp_path / "out.jsonl"
        path.write_text('{"a":1}\n\n{"a":2}\n', encoding="utf-8")
        assert [lineno for lineno, _ in read_jsonl(path)] == [1, 3]


class TestConfigFiles:
    def test_parse_lines(self, tmp_path):
        path = tmp_path / "cfg"
        path.write_text(
            "# comment\n\nreward.sigma = 3.5\ncoach.rollouts= 8\nmatch.normalize =off\n",
            encoding="utf-8",
        )
        assert parse_config_file(path) == {
            "reward.sigma": "3.5",
            "coach.rollouts": "8",
            "match.normalize": "off",
        }

    def test_missing_equals_raises(self, tmp_path):
        path = tmp_path / "cfg"
        path.write_text("reward.sigma 3.5\n", encoding="utf-8")
        with pytest.raises(SchemaError):
            parse_config_file(path)

    def test_build_configs_full(self):
        reward, coach, labels = build_configs(
            {
                "match.fuzzy_threshold": "0.9",
                "reward.sigma": "3.0",
                "reward.spatial_mode": "max_iou",
                "reward.candidate_statistic": "overall_sum",
                "reward.include_bare_timestamps": "false",
                "coach.rollouts": "8",
                "coach.hard_threshold": "1.5",
                "coach.top_n": "3",
                "labels.mode": "argmax_ag",
                "labels.correct_threshold": "0.6",
            }
        )
        assert reward.match.fuzzy_threshold == 0.9
        assert reward.sigma == 3.0
        assert reward.spatial_mode is SpatialMode.MAX_IOU
        assert reward.candidate_statistic is CandidateStatistic.OVERALL_SUM
        assert reward.include_bare_timestamps is False
        assert coach.rollouts == 8
        assert coach.hard_threshold == 1.5
        assert coach.top_n == 3
        assert coach.reward is reward
        assert labels == {"mode": SelectionMode.ARGMAX_AG, "correct_threshold": 0.6}

    def test_unknown_key_raises(self):
        with pytest.raises(SchemaError, match="unknown config key"):
            build_configs({"reward.gamma": "1"})

    def test_bad_value_reported_with_key(self):
        with pytest.raises(SchemaError, match="coach.rollouts"):
            build_configs({"coach.rollouts": "eight"})
        with pytest.raises(SchemaError, match="not a boolean"):
            build_configs({"match.normalize": "maybe"})
        with pytest.raises(SchemaError, match="reward.spatial_mode"):
            build_configs({"reward.spatial_mode": "sum_iou"})

    def test_defaults_when_no_path(self):
        reward, coach, labels = load_configs(None)
        assert reward.sigma == 2.0
        assert coach.rollouts == 4
        assert coach.hard_threshold == 2.21
        assert labels["mode"] is SelectionMode.FILTER_THEN_RANK

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cfg"
        path.write_text("coach.sd_alpha = 0.25\n", encoding="utf-8")
        _, coach, _ = load_configs(path)
        assert coach.sd_alpha == 0.25
