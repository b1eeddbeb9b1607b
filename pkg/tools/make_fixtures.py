"""Regenerate the committed test fixtures under tests/fixtures/.

Everything here is deterministic (seeded RNG, canonical JSON, PNG encoding),
so reruns are byte-identical; the golden output files are produced by the
package's own CLI and pinned by the test suite as regression anchors. Run
from the repository root:

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from vpcoach.cli import main as cli_main  # noqa: E402
from vpcoach.dataio import canonical_json  # noqa: E402
from vpcoach.prompts import save_frame  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

NAME_POOL = ["cup", "dog", "laptop", "plant", "ball", "chair", "bird", "car"]
OPTION_TEXT = "A. the cup B. the dog C. the laptop D. the plant"
LETTERS = "ABCD"
PHRASES = [
    "a red cup on the table",
    "the dog runs across the yard",
    "an open laptop near the window",
    "a tall plant beside the couch",
]


def write_lines(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_json(rec) + "\n")


def grid_box(rng: random.Random) -> list[int]:
    # int999 boxes snapped to a coarse grid so everything stays readable
    x1 = rng.randrange(0, 600, 50)
    y1 = rng.randrange(0, 600, 50)
    return [x1, y1, x1 + rng.randrange(150, 400, 50), y1 + rng.randrange(150, 400, 50)]


def tuple_claim(name: str, box, t) -> str:
    x1, y1, x2, y2 = box
    return f"<obj>{name}</obj><box>[{x1}, {y1}, {x2}, {y2}]</box>at<t>{t}</t>s"


def jitter_box(box, rng: random.Random) -> list[int]:
    out = []
    for i, v in enumerate(box):
        lo, hi = (0, 999)
        out.append(max(lo, min(hi, v + rng.choice([-60, -30, 30, 60]))))
    x1, y1, x2, y2 = out
    return [min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2)]


# --- score fixtures -----------------------------------------------------------


def build_score_fixtures() -> None:
    rng = random.Random(20250817)
    kinds = ["mcq", "open_ended", "spatial_grounding", "temporal_grounding"]
    dataset = [{"schema": "vpcoach/dataset", "version": 1, "box_convention": "int999"}]
    traces = []
    for i in range(100):
        kind = kinds[i % 4]
        sid = f"d{i:03d}"
        name = rng.choice(NAME_POOL)
        pos = float(rng.randint(3, 27))
        box = grid_box(rng)
        gt: dict = {
            "temporal": {"positions": [pos], "intervals": [[pos - 1.0, pos + 1.0]]},
            "keyframes": [{"t": pos, "objects": [{"name": name, "boxes": [box]}]}],
        }
        if kind == "mcq":
            letter = LETTERS[i % 4]
            question = f"Which object appears here? {OPTION_TEXT}"
            gt["answer"] = letter
            good_answer = f"The answer is {letter}"
            bad_answer = f"The answer is {LETTERS[(i + 1) % 4]}"
        elif kind == "open_ended":
            phrase = PHRASES[i % 4]
            question = "Describe the scene."
            gt["answer"] = phrase
            good_answer = phrase
            bad_answer = "something entirely different happens"
        elif kind == "spatial_grounding":
            question = f"Where is the {name}?"
            gt["answer_box"] = box
            good_answer = f"[{box[0]}, {box[1]}, {box[2]}, {box[3]}]"
            jb = jitter_box(box, rng)
            bad_answer = f"[{jb[0]}, {jb[1]}, {jb[2]}, {jb[3]}]"
        else:
            question = f"When does the {name} appear?"
            gt["answer_interval"] = [pos - 1.0, pos + 1.0]
            good_answer = f"[{pos - 1.0}, {pos + 1.0}]"
            bad_answer = f"[{pos + 2.0}, {pos + 6.0}]"
        dataset.append({"sample_id": sid, "task_kind": kind, "question": question, "gt": gt})

        good_think = f"I watch the {name} closely {tuple_claim(name, box, pos)} before deciding."
        traces.append(
            {
                "sample_id": sid,
                "rollout_id": 0,
                "trace_text": f"<think>{good_think}</think><answer>{good_answer}</answer>",
            }
        )
        flaw = i % 4
        if flaw == 0:
            # wrong answer, jittered box, timestamp off by 1.5s
            think = tuple_claim(name, jitter_box(box, rng), pos + 1.5)
            text = f"<think>maybe {think}</think><answer>{bad_answer}</answer>"
        elif flaw == 1:
            # unclosed think tag breaks the format
            text = f"<think>hasty guess<answer>{good_answer}</answer>"
        elif flaw == 2:
            # bare timestamp and an unknown object name
            think = f"at 4.0 s the scene shifts {tuple_claim('mystery', box, pos)}"
            text = f"<think>{think}</think><answer>{good_answer}</answer>"
        else:
            # corners arrive swapped; the parser repairs them
            x1, y1, x2, y2 = box
            think = tuple_claim(name, [x2, y2, x1, y1], pos)
            text = f"<think>{think}</think><answer>{good_answer}</answer>"
        traces.append({"sample_id": sid, "rollout_id": 1, "trace_text": text})

    write_lines(FIXTURES / "dataset_100.jsonl", dataset)
    write_lines(FIXTURES / "traces_100.jsonl", traces)
    rc = cli_main(
        [
            "score",
            "--traces",
            str(FIXTURES / "traces_100.jsonl"),
            "--dataset",
            str(FIXTURES / "dataset_100.jsonl"),
            "--out",
            str(FIXTURES / "golden_rewards.jsonl"),
        ]
    )
    if rc != 0:
        raise SystemExit(f"score golden run failed with exit code {rc}")


# --- coach fixtures -----------------------------------------------------------

GOOD, MEDIUM, BAD, BROKEN = "good", "medium", "bad", "broken"


def coach_trace(kind: str, letter: str, name: str, box, pos: float) -> str:
    claim = tuple_claim(name, box, pos)
    if kind == GOOD:
        return f"<think>clear view {claim}</think><answer>{letter}</answer>"
    if kind == MEDIUM:
        return f"<think>hard to ground this one</think><answer>{letter}</answer>"
    if kind == BAD:
        wrong = LETTERS[(LETTERS.index(letter) + 1) % 4]
        return f"<think>unsure</think><answer>{wrong}</answer>"
    return "<think>cut off mid thought"


def build_coach_fixtures() -> None:
    rng = random.Random(31415)
    dataset = [{"schema": "vpcoach/dataset", "version": 1, "box_convention": "normalized"}]
    policy = []
    selector = []
    prompt_kinds = ["circle", "darken", "numpro", "api_prompt"]
    for i in range(200):
        sid = f"c{i:03d}"
        letter = LETTERS[i % 4]
        name = NAME_POOL[i % len(NAME_POOL)]
        pos = float(rng.randint(2, 20))
        x1 = round(rng.uniform(0.05, 0.55), 2)
        y1 = round(rng.uniform(0.05, 0.55), 2)
        box = [x1, y1, round(x1 + 0.3, 2), round(y1 + 0.3, 2)]
        question = f"Which object is tracked? {OPTION_TEXT}"
        dataset.append(
            {
                "sample_id": sid,
                "task_kind": "mcq",
                "question": question,
                "gt": {
                    "answer": letter,
                    "temporal": {"positions": [pos]},
                    "keyframes": [{"t": pos, "objects": [{"name": name, "boxes": [box]}]}],
                },
            }
        )

        def render(tier: str) -> str:
            return coach_trace(tier, letter, name, box, pos)

        pattern = i % 5
        if pattern == 0:
            baseline = [GOOD] * 4  # easy: never prompted
            prompted = None
        elif pattern == 1:
            baseline = [MEDIUM] * 4
            prompted = [GOOD, GOOD, MEDIUM, BAD]
        elif pattern == 2:
            baseline = [BAD] * 4
            prompted = [GOOD] * 4  # uniform lift: whole group clears the gate
        elif pattern == 3:
            baseline = [MEDIUM] * 4
            prompted = [BAD] * 4  # guidance that does not help
        else:
            baseline = [BROKEN] * 4
            prompted = [GOOD, MEDIUM, MEDIUM, BAD]
        policy.append(
            {"sample_id": sid, "question": question, "completions": [render(t) for t in baseline]}
        )
        if prompted is not None:
            policy.append({"sample_id": sid, "completions": [render(t) for t in prompted]})
        selector.append({"sample_id": sid, "kind": prompt_kinds[i % 4]})

    write_lines(FIXTURES / "coach_dataset.jsonl", dataset)
    write_lines(FIXTURES / "coach_policy.jsonl", policy)
    write_lines(FIXTURES / "coach_selector.jsonl", selector)
    rc = cli_main(
        [
            "coach-sim",
            "--dataset",
            str(FIXTURES / "coach_dataset.jsonl"),
            "--policy",
            f"scripted:{FIXTURES / 'coach_policy.jsonl'}",
            "--selector",
            f"table:{FIXTURES / 'coach_selector.jsonl'}",
            "--out",
            str(FIXTURES / "golden_directives.jsonl"),
            "--seed",
            "0",
        ]
    )
    if rc != 0:
        raise SystemExit(f"coach golden run failed with exit code {rc}")


# --- metrics fixtures ----------------------------------------------------------


def build_metric_fixtures() -> None:
    write_lines(
        FIXTURES / "chains_ours.jsonl",
        [
            {"accuracy": 0.611, "mean_tiou": 0.257, "mean_viou": 0.272},
            {"accuracy": 0.611, "mean_tiou": 0.254, "mean_viou": 0.053},
        ],
    )
    write_lines(
        FIXTURES / "intervals.jsonl",
        [
            {"pred": [0.0, 4.0], "gt": [0.0, 10.0]},
            {"pred": [2.0, 8.0], "gt": [2.0, 12.0]},
        ],
    )


# --- pseudo-label fixtures ------------------------------------------------------


def label_trace(answer: str, claims: list[tuple[str, list[float]]]) -> str:
    think = " then ".join(tuple_claim(name, box, 1.0) for name, box in claims) or "no grounding"
    return f"<think>{think}</think><answer>{answer}</answer>"


def build_label_fixtures() -> None:
    full = [0.2, 0.2, 0.6, 0.6]
    half = [0.2, 0.2, 0.4, 0.6]  # IoU 0.5 against full
    records = [
        {"schema": "vpcoach/labels", "version": 1, "box_convention": "normalized"}
    ]
    # grounding quality separates the kinds; answers all correct
    records.append(
        {
            "sample_id": "L0",
            "gt_answer": "B",
            "options": OPTION_TEXT,
            "gt_boxes": [{"name": "dog", "box": full}],
            "reasoner_outputs": {
                "raw": [label_trace("B", []), label_trace("B", [])],
                "circle": [label_trace("B", [("dog", half)]), label_trace("B", [("dog", half)])],
                "darken": [label_trace("B", [("dog", full)]), label_trace("B", [("dog", full)])],
            },
        }
    )
    # one raw reasoner misses the answer, so raw is filtered out despite
    # grounding better than circle
    records.append(
        {
            "sample_id": "L1",
            "gt_answer": "A",
            "options": OPTION_TEXT,
            "gt_boxes": [{"name": "cup", "box": full}],
            "reasoner_outputs": {
                "raw": [label_trace("A", [("cup", full)]), label_trace("C", [("cup", full)])],
                "circle": [label_trace("A", [("cup", half)]), label_trace("A", [("cup", half)])],
            },
        }
    )
    # nobody is all-correct: falls back to argmax of A + G
    records.append(
        {
            "sample_id": "L2",
            "gt_answer": "D",
            "options": OPTION_TEXT,
            "gt_boxes": [{"name": "plant", "box": full}],
            "reasoner_outputs": {
                "raw": [label_trace("D", [("plant", half)]), label_trace("A", [("plant", half)])],
                "darken": [label_trace("D", [("plant", full)]), label_trace("A", [("plant", full)])],
            },
        }
    )
    # grounding tie between two kinds: the less invasive one wins
    records.append(
        {
            "sample_id": "L3",
            "gt_answer": "C",
            "options": OPTION_TEXT,
            "gt_boxes": [{"name": "laptop", "box": full}],
            "reasoner_outputs": {
                "numpro": [label_trace("C", [("laptop", full)])],
                "circle": [label_trace("C", [("laptop", full)])],
            },
        }
    )
    write_lines(FIXTURES / "labels_input.jsonl", records)
    rc = cli_main(
        [
            "build-labels",
            "--input",
            str(FIXTURES / "labels_input.jsonl"),
            "--out",
            str(FIXTURES / "golden_labels.jsonl"),
        ]
    )
    if rc != 0:
        raise SystemExit(f"labels golden run failed with exit code {rc}")


# --- rendering fixtures ---------------------------------------------------------


def build_prompt_fixtures() -> None:
    frames_dir = FIXTURES / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    h, w = 48, 64
    ramp_y = np.linspace(40, 200, h, dtype=np.float64)[:, None]
    ramp_x = np.linspace(0, 55, w, dtype=np.float64)[None, :]
    for i in range(8):
        frame = np.zeros((h, w, 3), dtype=np.uint8)
        frame[:, :, 0] = (ramp_y + ramp_x).astype(np.uint8)
        frame[:, :, 1] = np.uint8(90 + 15 * i)
        frame[:, :, 2] = (ramp_y[::-1] + ramp_x).astype(np.uint8)
        frame[:, i * 8 : i * 8 + 4, :] = 235  # per-frame stripe
        save_frame(frame, frames_dir / f"{i:02d}.png")

    dataset = [
        {"schema": "vpcoach/dataset", "version": 1, "box_convention": "normalized"},
        {
            "sample_id": "clip01",
            "task_kind": "mcq",
            "question": f"Which object is circled? {OPTION_TEXT}",
            "frame_paths": [f"frames/{i:02d}.png" for i in range(8)],
            "fps": 1.0,
            "gt": {
                "answer": "B",
                "temporal": {"positions": [2.0, 5.0]},
                "keyframes": [
                    {"t": 2.0, "objects": [{"name": "dog", "boxes": [[0.25, 0.25, 0.75, 0.7]]}]},
                    {"t": 5.0, "objects": [{"name": "dog", "boxes": [[0.3, 0.2, 0.8, 0.65]]}]},
                ],
            },
        },
    ]
    write_lines(FIXTURES / "prompt_dataset.jsonl", dataset)

    grid = [
        "# single relevance bump toward the lower right",
        "4 4",
        "0.05 0.05 0.10 0.10",
        "0.05 0.10 0.20 0.30",
        "0.10 0.20 0.55 0.70",
        "0.10 0.30 0.70 1.00",
    ]
    (FIXTURES / "relevance.txt").write_text("\n".join(grid) + "\n", encoding="utf-8")

    hints = [
        "# hint text appended to the question per prompt kind",
        "circle = Attend to the red circle.",
        "darken = Focus on the bright region.",
        "numpro = Frame numbers mark time; red numbers mark key moments.",
        "api_prompt = Warm colors highlight the relevant area.",
    ]
    (FIXTURES / "hints.txt").write_text("\n".join(hints) + "\n", encoding="utf-8")

    cfg = [
        "# exercise every config section",
        "reward.sigma = 2.0",
        "reward.tau = 1.0",
        "reward.spatial_mode = object_aware",
        "coach.rollouts = 4",
        "coach.hard_threshold = 2.21",
        "coach.top_n = 2",
        "labels.mode = filter_then_rank",
    ]
    (FIXTURES / "vpcoach.cfg").write_text("\n".join(cfg) + "\n", encoding="utf-8")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    build_score_fixtures()
    build_coach_fixtures()
    build_metric_fixtures()
    build_label_fixtures()
    build_prompt_fixtures()
    count = sum(1 for p in FIXTURES.rglob("*") if p.is_file())
    print(f"wrote {count} fixture files under {FIXTURES}")


if __name__ == "__main__":
    main()
