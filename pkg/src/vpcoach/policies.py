"""Policy and selector implementations the coach can drive.

Both interfaces speak plain dict wire formats so implementations can live
out-of-process: policies answer {sample_id, frame_paths, question, G, seed}
with {"completions": [...]}; selectors answer {sample_id, frame_paths,
question} with {"kind": "<token>"}. External commands exchange one
line-delimited JSON message per request over stdin/stdout (see
`python -m vpcoach.ref_agent` for a reference echo implementation).
"""

from __future__ import annotations

import json
import subprocess
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

from .errors import PolicyFailure, SelectorFailure
from .prompts import PromptKind


@dataclass(frozen=True)
class PolicyRequest:
    sample_id: str
    frame_paths: tuple[str, ...]
    question: str
    rollouts: int
    seed: int

    def to_wire(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "frame_paths": list(self.frame_paths),
            "question": self.question,
            "G": self.rollouts,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SelectorRequest:
    sample_id: str
    frame_paths: tuple[str, ...]
    question: str

    def to_wire(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "frame_paths": list(self.frame_paths),
            "question": self.question,
        }


@runtime_checkable
class Policy(Protocol):
    needs_frames: bool

    def complete(self, request: PolicyRequest) -> list[str]: ...


@runtime_checkable
class Selector(Protocol):
    def select(self, request: SelectorRequest) -> PromptKind: ...


class ScriptedPolicy:
    """Fixture-table policy: completions looked up by (sample_id, question).

    Entries without a question act as the sample's fallback for any question
    (handy for prompted rollouts whose hint text the fixture author does not
    want to hard-code). Never touches frames; ignores seeds.
    """

    needs_frames = False

    def __init__(self, entries: Sequence[dict]):
        self._exact: dict[tuple[str, str], list[str]] = {}
        self._fallback: dict[str, list[str]] = {}
        for entry in entries:
            completions = [str(c) for c in entry["completions"]]
            question = entry.get("question")
            if question is None:
                self._fallback[entry["sample_id"]] = completions
            else:
                self._exact[(entry["sample_id"], question)] = completions

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedPolicy":
        with open(path, encoding="utf-8") as fh:
            return cls([json.loads(line) for line in fh if line.strip()])

    def complete(self, request: PolicyRequest) -> list[str]:
        completions = self._exact.get((request.sample_id, request.question))
        if completions is None:
            completions = self._fallback.get(request.sample_id)
        if completions is None:
            raise PolicyFailure(f"no scripted completions for sample {request.sample_id!r}")
        if len(completions) < request.rollouts:
            raise PolicyFailure(
                f"sample {request.sample_id!r}: scripted table holds {len(completions)} "
                f"completions, {request.rollouts} requested"
            )
        return completions[: request.rollouts]


class _LineProtocolClient:
    """One persistent subprocess, one JSON line out per JSON line in."""

    def __init__(self, command: Sequence[str]):
        self._command = list(command)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def exchange(self, message: dict) -> dict:
        with self._lock:
            proc = self._ensure()
            try:
                proc.stdin.write(json.dumps(message) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as err:
                raise RuntimeError(f"subprocess pipe failed: {err}") from err
        if not line:
            code = proc.poll()
            raise RuntimeError(f"subprocess closed its output (exit code {code})")
        try:
            return json.loads(line)
        except json.JSONDecodeError as err:
            raise RuntimeError(f"subprocess sent invalid JSON: {line!r}") from err

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


class ExternalCommandPolicy:
    """Policy behind any executable speaking the line-delimited JSON protocol."""

    needs_frames = True

    def __init__(self, command: Sequence[str]):
        self._client = _LineProtocolClient(command)

    def complete(self, request: PolicyRequest) -> list[str]:
        try:
            reply = self._client.exchange(request.to_wire())
            completions = reply["completions"]
        except (RuntimeError, KeyError, TypeError) as err:
            raise PolicyFailure(f"sample {request.sample_id!r}: {err}") from err
        if not isinstance(completions, list) or len(completions) != request.rollouts:
            raise PolicyFailure(
                f"sample {request.sample_id!r}: expected {request.rollouts} completions"
            )
        return [str(c) for c in completions]

    def close(self) -> None:
        self._client.close()


@dataclass(frozen=True)
class ConstantSelector:
    kind: PromptKind

    def select(self, request: SelectorRequest) -> PromptKind:
        return self.kind


class TableSelector:
    """File-backed sample_id -> kind map."""

    def __init__(self, table: dict[str, PromptKind]):
        self._table = dict(table)

    @classmethod
    def from_jsonl(cls, path) -> "TableSelector":
        table: dict[str, PromptKind] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                table[rec["sample_id"]] = PromptKind(rec["kind"])
        return cls(table)

    def select(self, request: SelectorRequest) -> PromptKind:
        kind = self._table.get(request.sample_id)
        if kind is None:
            raise SelectorFailure(f"no selector entry for sample {request.sample_id!r}")
        return kind


class ExternalCommandSelector:
    def __init__(self, command: Sequence[str]):
        self._client = _LineProtocolClient(command)

    def select(self, request: SelectorRequest) -> PromptKind:
        try:
            reply = self._client.exchange(request.to_wire())
            return PromptKind(reply["kind"])
        except (RuntimeError, KeyError, ValueError, TypeError) as err:
            raise SelectorFailure(f"sample {request.sample_id!r}: {err}") from err

    def close(self) -> None:
        self._client.close()
