"""Append-only run traces: every engine call, sandbox run, vote, and decision.

A trace is held in memory and, when a path is given, mirrored to disk as
line-delimited JSON (one event per line) followed by a single trailer line
carrying the event count and a content hash, so that truncation and edits
are detectable afterwards.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .engine import TokenUsage
from .errors import CorruptTraceError

TRAILER_KEY = "__trailer__"

EVENT_KINDS = ("engine_call", "sandbox_run", "vote", "decision")


@dataclass
class TraceEvent:
    run_id: str
    seq: int
    kind: str
    role: str | None = None
    attempt_index: int | None = None
    plan_index: int | None = None
    payload: dict[str, Any] = field(default_factory=dict)
    usage: TokenUsage | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "run_id": self.run_id,
            "seq": self.seq,
            "kind": self.kind,
            "role": self.role,
            "attempt_index": self.attempt_index,
            "plan_index": self.plan_index,
            "payload": self.payload,
            "wall_time": self.wall_time,
        }
        if self.usage is not None:
            d["usage"] = {
                "prompt_tokens": self.usage.prompt_tokens,
                "completion_tokens": self.usage.completion_tokens,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TraceEvent":
        usage = None
        if "usage" in d:
            usage = TokenUsage(
                prompt_tokens=d["usage"]["prompt_tokens"],
                completion_tokens=d["usage"]["completion_tokens"],
            )
        return cls(
            run_id=d["run_id"],
            seq=d["seq"],
            kind=d["kind"],
            role=d.get("role"),
            attempt_index=d.get("attempt_index"),
            plan_index=d.get("plan_index"),
            payload=d.get("payload", {}),
            usage=usage,
            wall_time=d.get("wall_time", 0.0),
        )


def _event_line(event: TraceEvent) -> str:
    return json.dumps(event.to_dict(), sort_keys=True, separators=(",", ":"))


class Trace:
    """Thread-safe event sink for one pipeline run.

    ``deterministic`` zeroes every wall_time so that scripted runs are
    byte-for-byte reproducible.
    """

    def __init__(
        self,
        run_id: str,
        path: str | Path | None = None,
        deterministic: bool = False,
    ):
        self.run_id = run_id
        self.path = Path(path) if path is not None else None
        self.deterministic = deterministic
        self.events: list[TraceEvent] = []
        self._lock = threading.Lock()
        self._fh = None
        self._closed = False
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", encoding="utf-8")

    def append(
        self,
        kind: str,
        role: str | None = None,
        attempt_index: int | None = None,
        plan_index: int | None = None,
        payload: dict[str, Any] | None = None,
        usage: TokenUsage | None = None,
        wall_time: float = 0.0,
    ) -> TraceEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind: {kind!r}")
        with self._lock:
            event = TraceEvent(
                run_id=self.run_id,
                seq=len(self.events),
                kind=kind,
                role=role,
                attempt_index=attempt_index,
                plan_index=plan_index,
                payload=payload or {},
                usage=usage,
                wall_time=0.0 if self.deterministic else wall_time,
            )
            self.events.append(event)
            if self._fh is not None:
                self._fh.write(_event_line(event) + "\n")
                self._fh.flush()
        return event

    def now(self) -> float:
        return 0.0 if self.deterministic else time.monotonic()

    def elapsed(self, start: float) -> float:
        return 0.0 if self.deterministic else time.monotonic() - start

    def total_usage(self) -> TokenUsage:
        """Sum of token usage over every engine_call event so far."""
        prompt = completion = 0
        with self._lock:
            for ev in self.events:
                if ev.kind == "engine_call" and ev.usage is not None:
                    prompt += ev.usage.prompt_tokens
                    completion += ev.usage.completion_tokens
        return TokenUsage(prompt_tokens=prompt, completion_tokens=completion)

    def count(self, kind: str | None = None, role: str | None = None) -> int:
        with self._lock:
            return sum(
                1
                for ev in self.events
                if (kind is None or ev.kind == kind)
                and (role is None or ev.role == role)
            )

    def close(self) -> None:
        """Write the integrity trailer and release the file handle."""
        with self._lock:
            if self._closed:
                return
            self._closed = True
            if self._fh is None:
                return
            digest = hashlib.sha256()
            for ev in self.events:
                digest.update((_event_line(ev) + "\n").encode("utf-8"))
            trailer = {
                TRAILER_KEY: True,
                "event_count": len(self.events),
                "sha256": digest.hexdigest(),
            }
            self._fh.write(json.dumps(trailer, sort_keys=True, separators=(",", ":")) + "\n")
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Trace":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()


def read_trace(path: str | Path) -> list[TraceEvent]:
    """Load a persisted trace, verifying the trailer and sequence numbers.

    Raises CorruptTraceError on a missing trailer, an event-count or hash
    mismatch, or any gap in the seq numbering.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorruptTraceError(f"{path}: empty trace file")
    try:
        trailer = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise CorruptTraceError(f"{path}: unreadable trailer line") from exc
    if not isinstance(trailer, dict) or not trailer.get(TRAILER_KEY):
        raise CorruptTraceError(f"{path}: missing integrity trailer")

    event_lines = lines[:-1]
    if trailer.get("event_count") != len(event_lines):
        raise CorruptTraceError(
            f"{path}: trailer says {trailer.get('event_count')} events, "
            f"file has {len(event_lines)}"
        )
    digest = hashlib.sha256()
    for line in event_lines:
        digest.update((line + "\n").encode("utf-8"))
    if digest.hexdigest() != trailer.get("sha256"):
        raise CorruptTraceError(f"{path}: content hash mismatch")

    events = []
    for i, line in enumerate(event_lines):
        try:
            events.append(TraceEvent.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise CorruptTraceError(f"{path}: bad event on line {i + 1}") from exc
    for i, ev in enumerate(events):
        if ev.seq != i:
            raise CorruptTraceError(f"{path}: seq gap at position {i} (seq={ev.seq})")
    return events
