import json

import numpy as np
import pytest

from vpcoach.coach import (
    CoachConfig,
    CoachSample,
    RolloutSource,
    Trajectory,
    build_prompt_inputs,
    coach_step,
    identify_hard,
    per_sample_seed,
    relative_gain,
    run_coach,
    run_summary,
    sd_loss_spec,
    select_distillation_set,
)
from vpcoach.errors import EmptyVideo, PolicyFailure
from vpcoach.geometry import BoundingBox, KeyframeObjects, TemporalAnnotation
from vpcoach.policies import ConstantSelector, ScriptedPolicy, SelectorRequest
from vpcoach.prompts import DEFAULT_HINTS, PromptKind, save_frame
from vpcoach.rewards import (
    CandidateStatistic,
    GroundTruthAnnotation,
    RewardBreakdown,
    RewardConfig,
)
from vpcoach.trace import TaskKind

from .conftest import trace_text, tuple_text

BOX = (0.2, 0.2, 0.6, 0.6)
GOOD = trace_text(tuple_text("cat", BOX, 3.0), "C")
BAD = trace_text("no grounding", "B")


def mk_traj(acc=0.0, fmt=0.0, tmp=0.0, spa=0.0, stat=CandidateStatistic.OVERALL_SUM):
    return Trajectory("t", RewardBreakdown.build(acc, fmt, tmp, spa, stat), RolloutSource.BASELINE)


def mk_sample(sample_id="s1", question="Q?"):
    gt = GroundTruthAnnotation(
        task_kind=TaskKind.MCQ,
        answer="C",
        temporal=TemporalAnnotation((3.0,), ()),
        keyframes=(KeyframeObjects(3.0, (("cat", (BoundingBox(*BOX),)),)),),
    )
    return CoachSample(sample_id=sample_id, frame_paths=(), question=question, gt=gt)


class CountingSelector:
    def __init__(self, kind=PromptKind.CIRCLE):
        self.kind = kind
        self.calls = 0

    def select(self, request: SelectorRequest) -> PromptKind:
        self.calls += 1
        return self.kind


class TestIdentifyHard:
    def test_below_threshold_is_hard(self):
        trajs = [mk_traj(acc=1.0), mk_traj(acc=1.0, fmt=1.0), mk_traj(acc=1.0, fmt=1.0, tmp=1.0), mk_traj(acc=1.0, fmt=1.0)]
        decision = identify_hard(trajs, CoachConfig(hard_threshold=2.21))
        assert decision.mean_total == pytest.approx(2.0)
        assert decision.hard

    def test_boundary_is_easy(self):
        # strict comparison: mean exactly at the threshold stays easy
        trajs = [mk_traj(acc=1.0, fmt=1.0) for _ in range(4)]
        decision = identify_hard(trajs, CoachConfig(hard_threshold=2.0))
        assert decision.mean_total == 2.0
        assert not decision.hard

    def test_reports_both_scales(self):
        trajs = [mk_traj(acc=1.0, fmt=1.0, tmp=0.5, stat=CandidateStatistic.MEAN_ACC_TMP_SPA)]
        decision = identify_hard(trajs, CoachConfig())
        assert decision.mean_total == pytest.approx(2.5)
        assert decision.mean_stat == pytest.approx(0.5)


class TestSelectDistillation:
    def trajs(self):
        return [
            mk_traj(acc=1.0, fmt=1.0, tmp=0.5),          # total 2.5
            mk_traj(acc=1.0),                            # total 1.0
            mk_traj(acc=0.5, fmt=1.0, tmp=1.0, spa=0.5), # total 3.0
        ]

    def test_gate_and_rank(self):
        candidates, selected = select_distillation_set(2.0, self.trajs(), CoachConfig(top_n=2))
        assert candidates == [0, 2]
        assert selected == [0, 2]  # acc 1.0 ranks above acc 0.5

    def test_gate_is_strict(self):
        trajs = [mk_traj(acc=1.0, fmt=1.0)]  # stat == 2.0
        candidates, selected = select_distillation_set(2.0, trajs, CoachConfig())
        assert candidates == [] and selected == []

    def test_tie_break_total_then_index(self):
        trajs = [
            mk_traj(acc=1.0, fmt=0.0, tmp=1.0),  # acc 1, total 2
            mk_traj(acc=1.0, fmt=1.0, tmp=1.0),  # acc 1, total 3
            mk_traj(acc=1.0, fmt=0.0, tmp=1.0),  # acc 1, total 2 (same as 0)
        ]
        _, selected = select_distillation_set(0.0, trajs, CoachConfig(top_n=3))
        assert selected == [1, 0, 2]

    def test_top_n_caps(self):
        _, selected = select_distillation_set(0.0, self.trajs(), CoachConfig(top_n=1))
        assert selected == [0]


class TestGainAndWeights:
    def test_relative_gain(self):
        assert relative_gain(2.0, 3.2) == pytest.approx(60.0)
        assert relative_gain(2.0, 1.0) == pytest.approx(-50.0)
        assert relative_gain(0.0, 1.0) is None
        assert relative_gain(-0.5, 1.0) is None

    def test_sd_weights_split_alpha(self):
        sample = mk_sample()
        policy = ScriptedPolicy(
            [
                {"sample_id": "s1", "question": "Q?", "completions": [BAD] * 4},
                {"sample_id": "s1", "completions": [GOOD, GOOD, BAD, BAD]},
            ]
        )
        result = coach_step(sample, policy, ConstantSelector(PromptKind.CIRCLE))
        spec = sd_loss_spec(result.directive)
        assert len(spec) == 2
        assert all(w == pytest.approx(0.1 / 2) for _, w in spec)
        assert [t for t, _ in spec] == list(result.directive.sd_targets)


class TestPerSampleSeed:
    def test_frozen_values(self):
        assert per_sample_seed(0, "s1") == 761228788
        assert per_sample_seed(0, "s2") == 878066766
        assert per_sample_seed(7, "alpha") == 1133227550
        assert per_sample_seed(7, "beta") == 1845095918

    def test_range(self):
        for seed in (0, 1, 2**40):
            for sid in ("a", "b", "long-sample-id-42"):
                got = per_sample_seed(seed, sid)
                assert 0 <= got < 2**31


class TestCoachStepEasy:
    def test_easy_sample_skips_selector_and_prompting(self):
        sample = mk_sample()
        policy = ScriptedPolicy([{"sample_id": "s1", "completions": [GOOD] * 4}])
        selector = CountingSelector()
        result = coach_step(sample, policy, selector)
        d = result.directive
        assert not d.hard
        assert selector.calls == 0
        assert result.prompted == ()
        assert d.selected_prompt is None
        assert d.sd_targets == ()
        assert d.advantage_source == "baseline"
        assert d.advantages == (0.0, 0.0, 0.0, 0.0)  # identical rewards
        assert d.relative_gain is None


class TestCoachStepHard:
    def setup_method(self):
        self.sample = mk_sample()
        self.policy = ScriptedPolicy(
            [
                {"sample_id": "s1", "question": "Q?", "completions": [BAD] * 4},
                {"sample_id": "s1", "completions": [GOOD, GOOD, GOOD, BAD]},
            ]
        )

    def test_hard_path_directive(self):
        selector = CountingSelector(PromptKind.DARKEN)
        result = coach_step(self.sample, self.policy, selector)
        d = result.directive
        assert d.hard and selector.calls == 1
        assert d.selected_prompt is PromptKind.DARKEN
        assert d.prompted_question == "Q?\n" + DEFAULT_HINTS[PromptKind.DARKEN]
        # baseline all BAD: acc 0, fmt 1 -> total 1.0, stat 0.0
        assert d.baseline_mean_total == pytest.approx(1.0)
        assert d.baseline_mean == pytest.approx(0.0)
        # three GOOD rollouts clear the stat gate, BAD (stat 0) does not
        assert d.candidate_set_size == 3
        assert d.sd_target_indices == (0, 1)
        assert d.sd_targets == (GOOD, GOOD)
        assert len(d.advantages) == 4
        assert d.advantage_source == "prompted"
        assert d.relative_gain is not None and d.relative_gain > 0

    def test_advantage_source_baseline(self):
        cfg = CoachConfig(advantage_source="baseline")
        result = coach_step(self.sample, self.policy, ConstantSelector(PromptKind.CIRCLE), cfg)
        # baseline rewards are identical -> normalized advantages all zero
        assert result.directive.advantages == (0.0, 0.0, 0.0, 0.0)
        assert result.directive.advantage_source == "baseline"

    def test_advantages_normalize_prompted_totals(self):
        result = coach_step(self.sample, self.policy, ConstantSelector(PromptKind.CIRCLE))
        totals = [t.rewards.total for t in result.prompted]
        mean = sum(totals) / 4
        var = sum((v - mean) ** 2 for v in totals) / 4
        want = tuple((v - mean) / var**0.5 for v in totals)
        assert result.directive.advantages == pytest.approx(want)

    def test_raw_prompt_reuses_baseline_question(self):
        selector = CountingSelector(PromptKind.RAW)
        result = coach_step(self.sample, self.policy, selector)
        # raw keeps the exact question, so the exact-match scripted entry
        # answers the prompted request too
        assert result.directive.prompted_question == "Q?"
        assert result.directive.candidate_set_size == 0


class TestBuildPromptInputs:
    def test_question_only_when_not_rendering(self):
        sample = mk_sample()
        paths, question = build_prompt_inputs(sample, PromptKind.CIRCLE, CoachConfig(), render=False)
        assert paths == ()
        assert question == "Q?\n" + DEFAULT_HINTS[PromptKind.CIRCLE]

    def test_raw_identity(self):
        sample = mk_sample()
        paths, question = build_prompt_inputs(sample, PromptKind.RAW, CoachConfig(), render=True)
        assert question == "Q?"

    def test_custom_hints(self):
        sample = mk_sample()
        hints = dict(DEFAULT_HINTS)
        hints[PromptKind.CIRCLE] = "custom hint"
        _, question = build_prompt_inputs(
            sample, PromptKind.CIRCLE, CoachConfig(), render=False, hints=hints
        )
        assert question.endswith("\ncustom hint")

    def test_render_writes_frames(self, tmp_path):
        frame_dir = tmp_path / "frames"
        frame_dir.mkdir()
        rng = np.random.default_rng(3)
        paths = []
        for i in range(8):
            p = frame_dir / f"{i:02d}.png"
            save_frame(rng.integers(0, 255, size=(48, 64, 3), dtype=np.uint8), p)
            paths.append(str(p))
        sample = CoachSample(
            sample_id="vid",
            frame_paths=tuple(paths),
            question="Q?",
            gt=mk_sample().gt,
            fps=1.0,
        )
        cfg = CoachConfig(frames_per_sample=4)
        out_paths, question = build_prompt_inputs(
            sample, PromptKind.NUMBER, cfg, render=True, prompt_dir=tmp_path / "out"
        )
        assert len(out_paths) == 4
        assert all(p.endswith(".png") for p in out_paths)
        assert "vid" in out_paths[0] and "numpro" in out_paths[0]
        assert question == "Q?\n" + DEFAULT_HINTS[PromptKind.NUMBER]

    def test_render_requires_prompt_dir(self, tmp_path):
        frame_dir = tmp_path / "frames"
        frame_dir.mkdir()
        p = frame_dir / "0.png"
        save_frame(np.zeros((8, 8, 3), dtype=np.uint8), p)
        sample = CoachSample(
            sample_id="vid",
            frame_paths=(str(p),),
            question="Q?",
            gt=mk_sample().gt,
        )
        with pytest.raises(ValueError):
            build_prompt_inputs(sample, PromptKind.NUMBER, CoachConfig(), render=True)

    def test_render_frameless_raises_empty_video(self, tmp_path):
        sample = mk_sample()
        with pytest.raises(EmptyVideo, match="no frames to prompt"):
            build_prompt_inputs(
                sample, PromptKind.CIRCLE, CoachConfig(), render=True, prompt_dir=tmp_path
            )


def easy_entry(sid):
    return {"sample_id": sid, "completions": [GOOD] * 4}


def hard_entries(sid):
    return [
        {"sample_id": sid, "question": "Q?", "completions": [BAD] * 4},
        {"sample_id": sid, "completions": [GOOD, BAD, BAD, BAD]},
    ]


class TestRunCoach:
    def build(self, n=12):
        samples = []
        entries = []
        for i in range(n):
            sid = f"s{i:03d}"
            samples.append(mk_sample(sid))
            if i % 3 == 0:
                entries.append(easy_entry(sid))
            else:
                entries.extend(hard_entries(sid))
        return samples, ScriptedPolicy(entries)

    def test_input_order_preserved_any_jobs(self):
        samples, policy = self.build()
        for jobs in (1, 4):
            directives, failures = run_coach(
                samples, policy, ConstantSelector(PromptKind.CIRCLE), jobs=jobs
            )
            assert failures == []
            assert [d.sample_id for d in directives] == [s.sample_id for s in samples]

    def test_jobs_do_not_change_results(self):
        samples, policy = self.build()
        runs = []
        for jobs in (1, 8):
            directives, _ = run_coach(
                samples, policy, ConstantSelector(PromptKind.CIRCLE), seed=5, jobs=jobs
            )
            runs.append([json.dumps(d.to_json_dict(), sort_keys=True) for d in directives])
        assert runs[0] == runs[1]

    def test_failures_reported_not_fatal(self):
        samples, _ = self.build(6)
        policy = ScriptedPolicy(
            [easy_entry("s000"), easy_entry("s002"), easy_entry("s004")]
        )
        directives, failures = run_coach(samples, policy, ConstantSelector(PromptKind.CIRCLE))
        assert [d.sample_id for d in directives] == ["s000", "s002", "s004"]
        assert len(failures) == 3
        assert all("no scripted completions" in f for f in failures)

    def test_summary_shape(self):
        samples, policy = self.build(9)
        directives, failures = run_coach(samples, policy, ConstantSelector(PromptKind.DARKEN))
        summary = run_summary(directives, failures)
        assert summary["samples"] == 9
        assert summary["hard"] + summary["easy"] == summary["scored"] == 9
        assert summary["selected_prompts"] == {"darken": summary["hard"]}
        assert summary["with_sd_targets"] == summary["hard"]

    def test_policy_failure_propagates_from_rollouts(self):
        class Broken:
            needs_frames = False

            def complete(self, request):
                raise RuntimeError("boom")

        with pytest.raises(PolicyFailure):
            coach_step(mk_sample(), Broken(), ConstantSelector(PromptKind.CIRCLE))

    def test_frame_reading_policy_on_frameless_samples_degrades_per_sample(self):
        class FrameReading(ScriptedPolicy):
            needs_frames = True

        samples, _ = self.build(6)
        policy = FrameReading(
            [easy_entry("s000"), easy_entry("s003")]
            + hard_entries("s001")
            + hard_entries("s002")
            + hard_entries("s004")
            + hard_entries("s005")
        )
        directives, failures = run_coach(samples, policy, ConstantSelector(PromptKind.CIRCLE))
        assert [d.sample_id for d in directives] == ["s000", "s003"]
        assert len(failures) == 4
        assert all("no frames to prompt" in f for f in failures)
