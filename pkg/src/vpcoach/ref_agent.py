"""Reference line-protocol agent for exercising the external command hooks.

Run as `python -m vpcoach.ref_agent policy` or `... selector`; reads one JSON
request per line on stdin and writes one JSON reply per line on stdout. The
policy variant emits deterministic well-formed traces derived from the
request, the selector variant answers with a fixed prompt kind. Useful as a
smoke target for ExternalCommandPolicy / ExternalCommandSelector and as a
template for real bridges.
"""

from __future__ import annotations

import argparse
import json
import sys


def _policy_reply(req: dict, answer: str) -> dict:
    sample_id = req.get("sample_id", "?")
    rollouts = int(req.get("G", 1))
    seed = int(req.get("seed", 0))
    completions = []
    for i in range(rollouts):
        t = float((seed + i) % 7)
        completions.append(
            "<think>rollout {i} for {sid} sees <obj>subject</obj>"
            "<box>[0.2, 0.2, 0.6, 0.6]</box>at<t>{t}</t>s</think>"
            "<answer>{ans}</answer>".format(i=i, sid=sample_id, t=t, ans=answer)
        )
    return {"completions": completions}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vpcoach-ref-agent", description=__doc__)
    parser.add_argument("mode", choices=["policy", "selector"])
    parser.add_argument("--answer", default="A", help="answer text the policy emits")
    parser.add_argument("--kind", default="circle", help="prompt kind the selector emits")
    args = parser.parse_args(argv)

    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        if args.mode == "policy":
            reply = _policy_reply(req, args.answer)
        else:
            reply = {"kind": args.kind}
        sys.stdout.write(json.dumps(reply, separators=(",", ":")) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
