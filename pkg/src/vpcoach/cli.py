"""Command line front end.

Subcommands:
  score        reward a file of traces against a dataset
  prompt       render visually prompted frames for one sample
  coach-sim    run the coach loop against pluggable policy/selector backends
  metrics      evaluation reports over chain or interval records
  build-labels pick pseudo-labels from per-kind reasoner outputs

Global flags --config/--seed/--jobs/--format; environment variables
VPCOACH_CONFIG, VPCOACH_SEED, VPCOACH_JOBS, VPCOACH_FORMAT supply defaults.
Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .coach import run_coach, run_summary
from .dataio import (
    LABELS_SCHEMA,
    SCHEMA_VERSION,
    canonical_json,
    load_configs,
    load_dataset,
    parse_convention,
    write_jsonl,
)
from .errors import SchemaError, VpcoachError
from .geometry import NORMALIZED, canonical_box
from .matching import DEFAULT_MATCH
from .metrics import ChainScores, chain_report, interval_report
from .policies import (
    ConstantSelector,
    ExternalCommandPolicy,
    ExternalCommandSelector,
    ScriptedPolicy,
    TableSelector,
)
from .prompts import KIND_TIE_ORDER, FileRelevanceProvider, PromptKind, load_hint_templates
from .rewards import overall_reward
from .selector_data import (
    LabelGroundTruth,
    label_distribution,
    score_candidate,
    select_pseudo_label,
)
from .trace import parse_trace


class _UsageError(Exception):
    pass


def _env(name: str, fallback=None):
    value = os.environ.get(name)
    return fallback if value in (None, "") else value


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)


def _print_summary(summary: dict, fmt: str) -> None:
    if fmt == "json":
        print(canonical_json(summary))
        return
    rows = []
    for key, value in summary.items():
        if isinstance(value, float):
            rows.append([key, f"{value:.6g}"])
        elif isinstance(value, dict):
            rows.append([key, ", ".join(f"{k}={v}" for k, v in value.items()) or "-"])
        else:
            rows.append([key, str(value)])
    print(_table(["field", "value"], rows))


def _fmt_num(value) -> str:
    if value is None:
        return "-"
    return f"{value:.6g}"


# --- score ------------------------------------------------------------------


def _cmd_score(args, reward_cfg, coach_cfg, labels_cfg) -> int:
    samples, convention, warnings = load_dataset(args.dataset)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    by_id = {s.sample_id: s for s in samples}

    records = []
    skipped = 0
    with open(args.traces, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sample_id = str(rec["sample_id"])
                rollout_id = rec.get("rollout_id", 0)
                text = str(rec["trace_text"])
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                print(f"warning: {args.traces}:{lineno}: skipped ({err})", file=sys.stderr)
                skipped += 1
                continue
            if sample_id not in by_id:
                print(
                    f"warning: {args.traces}:{lineno}: unknown sample_id {sample_id!r}",
                    file=sys.stderr,
                )
                skipped += 1
                continue
            records.append((sample_id, rollout_id, text))

    def score_one(item):
        sample_id, rollout_id, text = item
        trace = parse_trace(text, convention=convention)
        breakdown = overall_reward(trace, by_id[sample_id].gt, reward_cfg)
        return {
            "sample_id": sample_id,
            "rollout_id": rollout_id,
            "trace_text": text,
            "rewards": breakdown.to_json_dict(),
        }

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            out = list(pool.map(score_one, records))
    else:
        out = [score_one(item) for item in records]

    if args.out:
        write_jsonl(args.out, out)
        print(f"scored {len(out)} traces ({skipped} skipped) -> {args.out}", file=sys.stderr)
    elif args.format == "json":
        for rec in out:
            print(canonical_json(rec))
    else:
        rows = [
            [
                rec["sample_id"],
                str(rec["rollout_id"]),
                _fmt_num(rec["rewards"]["acc"]),
                _fmt_num(rec["rewards"]["fmt"]),
                _fmt_num(rec["rewards"]["tmp"]),
                _fmt_num(rec["rewards"]["spa"]),
                _fmt_num(rec["rewards"]["total"]),
            ]
            for rec in out
        ]
        print(_table(["sample", "rollout", "acc", "fmt", "tmp", "spa", "total"], rows))
    return 0


# --- prompt -----------------------------------------------------------------


def _relevance_provider(args):
    if getattr(args, "relevance", None) is None:
        return None
    return FileRelevanceProvider(args.relevance)


def _hints(args):
    if getattr(args, "hints", None) is None:
        return None
    return load_hint_templates(args.hints)


def _cmd_prompt(args, reward_cfg, coach_cfg, labels_cfg) -> int:
    from .coach import build_prompt_inputs

    samples, _, warnings = load_dataset(args.dataset, validate_frames=True)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    matches = [s for s in samples if s.sample_id == args.sample_id]
    if not matches:
        print(f"error: sample {args.sample_id!r} not in {args.dataset}", file=sys.stderr)
        return 1
    kind = PromptKind(args.kind)
    paths, question = build_prompt_inputs(
        matches[0],
        kind,
        coach_cfg,
        render=True,
        relevance_provider=_relevance_provider(args),
        hints=_hints(args),
        prompt_dir=args.out_dir,
    )
    result = {
        "sample_id": args.sample_id,
        "kind": kind.value,
        "question": question,
        "frames": list(paths),
    }
    if args.format == "json":
        print(canonical_json(result))
    else:
        rows = [["sample", args.sample_id], ["kind", kind.value], ["question", question]]
        rows += [[f"frame {i}", p] for i, p in enumerate(paths)]
        print(_table(["field", "value"], rows))
    return 0


# --- coach-sim ---------------------------------------------------------------


def _parse_policy(spec: str):
    scheme, _, rest = spec.partition(":")
    if scheme == "scripted" and rest:
        return ScriptedPolicy.from_jsonl(rest)
    if scheme == "cmd" and rest:
        return ExternalCommandPolicy(shlex.split(rest))
    raise _UsageError(f"policy spec {spec!r}; expected scripted:FILE or cmd:COMMAND")


def _parse_selector(spec: str):
    scheme, _, rest = spec.partition(":")
    if scheme == "constant" and rest:
        try:
            return ConstantSelector(PromptKind(rest))
        except ValueError as err:
            raise _UsageError(str(err)) from err
    if scheme == "table" and rest:
        return TableSelector.from_jsonl(rest)
    if scheme == "cmd" and rest:
        return ExternalCommandSelector(shlex.split(rest))
    raise _UsageError(
        f"selector spec {spec!r}; expected constant:KIND, table:FILE, or cmd:COMMAND"
    )


def _cmd_coach_sim(args, reward_cfg, coach_cfg, labels_cfg) -> int:
    samples, _, warnings = load_dataset(args.dataset)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    policy = _parse_policy(args.policy)
    selector = _parse_selector(args.selector)
    if getattr(policy, "needs_frames", True) and args.prompt_dir is None:
        raise _UsageError("--prompt-dir is required with a frame-reading policy (cmd:...)")
    try:
        directives, failures = run_coach(
            samples,
            policy,
            selector,
            coach_cfg,
            seed=args.seed,
            jobs=args.jobs,
            relevance_provider=_relevance_provider(args),
            hints=_hints(args),
            prompt_dir=args.prompt_dir,
        )
    finally:
        for backend in (policy, selector):
            close = getattr(backend, "close", None)
            if close is not None:
                close()
    for failure in failures:
        print(f"warning: {failure}", file=sys.stderr)
    if args.out:
        write_jsonl(args.out, (d.to_json_dict() for d in directives))
    else:
        for d in directives:
            print(canonical_json(d.to_json_dict()))
    _print_summary(run_summary(directives, failures), args.format)
    if failures and not directives:
        return 1
    return 0


# --- metrics ------------------------------------------------------------------


def _cmd_metrics(args, reward_cfg, coach_cfg, labels_cfg) -> int:
    chains: list[ChainScores] = []
    preds: list[tuple[float, float]] = []
    gts: list[tuple[float, float]] = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if args.kind == "chains":
                    chains.append(
                        ChainScores(
                            accuracy=float(rec["accuracy"]),
                            mean_tiou=float(rec["mean_tiou"]),
                            mean_viou=float(rec["mean_viou"]),
                        )
                    )
                else:
                    s, e = (float(v) for v in rec["pred"])
                    gs, ge = (float(v) for v in rec["gt"])
                    preds.append((s, e) if s <= e else (e, s))
                    gts.append((gs, ge) if gs <= ge else (ge, gs))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as err:
                print(f"warning: {args.input}:{lineno}: skipped ({err})", file=sys.stderr)

    if args.kind == "chains":
        report = chain_report(chains)
        if args.format == "json":
            print(canonical_json(report))
        else:
            rows = [
                [
                    str(i),
                    _fmt_num(c["accuracy"]),
                    _fmt_num(c["mean_tiou"]),
                    _fmt_num(c["mean_viou"]),
                    _fmt_num(c["am"]),
                    _fmt_num(c["gm"]),
                    _fmt_num(c["lgm"]),
                ]
                for i, c in enumerate(report["chains"])
            ]
            print(_table(["chain", "acc", "tiou", "viou", "am", "gm", "lgm"], rows))
            print(f"mam={_fmt_num(report['mam'])} mlgm={_fmt_num(report['mlgm'])}")
    else:
        report = interval_report(preds, gts)
        if args.format == "json":
            print(canonical_json(report))
        else:
            rows = [["count", str(report["count"])]]
            rows += [[f"recall@{k}", _fmt_num(v)] for k, v in report["recall"].items()]
            rows.append(["mean_iou", _fmt_num(report["mean_iou"])])
            print(_table(["metric", "value"], rows))
    return 0


# --- build-labels -------------------------------------------------------------


def _cmd_build_labels(args, reward_cfg, coach_cfg, labels_cfg) -> int:
    mode = labels_cfg["mode"]
    threshold = labels_cfg["correct_threshold"]
    if args.mode is not None:
        from .selector_data import SelectionMode

        mode = SelectionMode(args.mode)
    if args.threshold is not None:
        threshold = args.threshold

    convention = NORMALIZED
    out_records = []
    labels: list[PromptKind] = []
    first = True
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                print(f"warning: {args.input}:{lineno}: invalid JSON ({err.msg})", file=sys.stderr)
                first = False
                continue
            if first and isinstance(rec, dict) and "schema" in rec:
                first = False
                if rec["schema"] != LABELS_SCHEMA:
                    raise SchemaError(f"{args.input}: schema {rec['schema']!r} is not {LABELS_SCHEMA!r}")
                if rec.get("version") != SCHEMA_VERSION:
                    raise SchemaError(f"{args.input}: version {rec.get('version')!r} is not {SCHEMA_VERSION}")
                if "box_convention" in rec:
                    convention = parse_convention(rec["box_convention"])
                continue
            first = False
            try:
                sample_id = str(rec["sample_id"])
                gt = LabelGroundTruth(
                    answer=str(rec["gt_answer"]),
                    options=str(rec.get("options") or ""),
                    boxes=tuple(
                        (
                            str(b["name"]),
                            canonical_box(*convention.to_unit(*(float(v) for v in b["box"])))[0],
                        )
                        for b in rec.get("gt_boxes", ())
                    ),
                )
                candidates = []
                for kind_token in sorted(
                    rec["reasoner_outputs"], key=lambda k: KIND_TIE_ORDER.index(PromptKind(k))
                ):
                    traces = [
                        parse_trace(text, convention=convention)
                        for text in rec["reasoner_outputs"][kind_token]
                    ]
                    candidates.append(
                        score_candidate(PromptKind(kind_token), traces, gt, reward_cfg.match)
                    )
                chosen = select_pseudo_label(candidates, mode=mode, correct_threshold=threshold)
            except (KeyError, ValueError, TypeError, VpcoachError) as err:
                print(f"warning: {args.input}:{lineno}: skipped record ({err})", file=sys.stderr)
                continue
            labels.append(chosen)
            out_records.append(
                {
                    "sample_id": sample_id,
                    "label": chosen.value,
                    "scores": {
                        c.kind.value: {"A": c.answer_mean, "G": c.grounding_mean}
                        for c in candidates
                    },
                }
            )

    if args.out:
        write_jsonl(args.out, out_records)
    else:
        for rec in out_records:
            print(canonical_json(rec))
    summary = {
        "samples": len(out_records),
        "distribution": {
            k: v["pct"] for k, v in label_distribution(labels).items()
        },
    }
    _print_summary(summary, args.format)
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpcoach", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=_env("VPCOACH_CONFIG"), help="dotted key = value config file")
    common.add_argument("--seed", type=int, default=int(_env("VPCOACH_SEED", "0")), help="base RNG seed")
    common.add_argument("--jobs", type=int, default=int(_env("VPCOACH_JOBS", "1")), help="worker threads")
    common.add_argument(
        "--format",
        choices=["json", "table"],
        default=_env("VPCOACH_FORMAT", "json"),
        help="stdout rendering",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="reward traces against a dataset")
    p.add_argument("--traces", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("prompt", parents=[common], help="render prompted frames for one sample")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sample-id", required=True)
    p.add_argument("--kind", required=True, choices=[k.value for k in PromptKind])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--relevance", default=None)
    p.add_argument("--hints", default=None)
    p.set_defaults(func=_cmd_prompt)

    p = sub.add_parser("coach-sim", parents=[common], help="run the coach loop")
    p.add_argument("--dataset", required=True)
    p.add_argument("--policy", required=True, help="scripted:FILE or cmd:COMMAND")
    p.add_argument("--selector", required=True, help="constant:KIND, table:FILE, or cmd:COMMAND")
    p.add_argument("--out", default=None, help="directive JSONL path")
    p.add_argument("--relevance", default=None)
    p.add_argument("--hints", default=None)
    p.add_argument(
        "--prompt-dir",
        default=None,
        help="directory for rendered prompted frames (required with cmd: policies)",
    )
    p.set_defaults(func=_cmd_coach_sim)

    p = sub.add_parser("metrics", parents=[common], help="evaluation reports")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=["chains", "intervals"], default="chains")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("build-labels", parents=[common], help="pseudo-label selection")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--mode", default=None, choices=["filter_then_rank", "argmax_ag"])
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=_cmd_build_labels)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValueError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    try:
        reward_cfg, coach_cfg, labels_cfg = load_configs(args.config)
    except (SchemaError, OSError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    try:
        return args.func(args, reward_cfg, coach_cfg, labels_cfg)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except (VpcoachError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
