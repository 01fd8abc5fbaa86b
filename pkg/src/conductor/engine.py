"""Uniform gateway to a chat-completion engine.

Two engine kinds sit behind one ``complete()`` call: a deterministic
scripted engine for tests and offline runs, and a client for any HTTP
service speaking the common chat-completion JSON protocol.
"""

from __future__ import annotations

import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

import requests

from .errors import NoMatchError, ProtocolError, RequestTimeoutError, TransportError

if TYPE_CHECKING:
    from .trace import Trace

ROLES = ("system", "user", "assistant")
FINISH_REASONS = ("stop", "length", "error")

DEFAULT_API_KEY_ENV = "CONDUCTOR_API_KEY"


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"bad message role: {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_tokens: int = 4096
    seed: int | None = None
    stop: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            prompt_tokens=self.prompt_tokens + other.prompt_tokens,
            completion_tokens=self.completion_tokens + other.completion_tokens,
        )


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: str = "stop"
    usage: TokenUsage = field(default_factory=TokenUsage)


Matcher = Callable[[str], bool]


def contains(needle: str) -> Matcher:
    """Matcher: the rendered prompt contains ``needle`` (case-sensitive)."""

    def _match(prompt: str) -> bool:
        return needle in prompt

    return _match


def always() -> Matcher:
    def _match(prompt: str) -> bool:
        return True

    return _match


class ScriptedSource:
    """Ordered (matcher, response) entries, consumed first-match-wins.

    Consumption is serialized with a lock, so concurrent callers are safe;
    results are only deterministic when matchers are disjoint, which is why
    scripted scenarios are run single-threaded by the harness.
    """

    def __init__(self, entries: Sequence[tuple[Matcher, str]]):
        if not entries:
            raise ValueError("scripted engine needs at least one entry")
        self._entries: list[tuple[Matcher, str]] = list(entries)
        self._lock = threading.Lock()

    def consume(self, prompt: str) -> str:
        with self._lock:
            for i, (matcher, response) in enumerate(self._entries):
                if matcher(prompt):
                    del self._entries[i]
                    return response
        raise NoMatchError(
            f"no scripted entry matches prompt ({len(self._entries)} entries left)"
        )

    def remaining(self) -> int:
        with self._lock:
            return len(self._entries)


@dataclass
class EngineDescriptor:
    kind: str  # "scripted" | "remote"
    model_name: str = "scripted"
    endpoint: str | None = None
    default_params: GenerationParams = field(default_factory=GenerationParams)
    max_retries: int = 3
    request_timeout: float = 120.0
    backoff_base: float = 0.5
    api_key_env: str = DEFAULT_API_KEY_ENV
    script: ScriptedSource | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("scripted", "remote"):
            raise ValueError(f"bad engine kind: {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote engine requires an endpoint")
        if self.kind == "scripted" and self.script is None:
            raise ValueError("scripted engine requires a script")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def make_scripted_engine(
    script: Sequence[tuple[Matcher | str, str] | str],
    model_name: str = "scripted",
    default_params: GenerationParams | None = None,
) -> EngineDescriptor:
    """Build a deterministic test engine from an ordered script.

    Each entry is (matcher, response); a plain string matcher means
    substring match, and a bare string entry is an always-match response
    (queue style). Every complete() call consumes the first entry whose
    matcher accepts the rendered prompt.
    """
    entries: list[tuple[Matcher, str]] = []
    for entry in script:
        if isinstance(entry, str):
            entries.append((always(), entry))
            continue
        matcher, response = entry
        if isinstance(matcher, str):
            matcher = contains(matcher)
        entries.append((matcher, response))
    return EngineDescriptor(
        kind="scripted",
        model_name=model_name,
        default_params=default_params or GenerationParams(),
        script=ScriptedSource(entries),
    )


def render_prompt(messages: Sequence[Message]) -> str:
    """Flatten a message list to the text scripted matchers see."""
    return "\n".join(m.content for m in messages)


def estimate_usage(prompt: str, completion: str) -> TokenUsage:
    """Whitespace-token estimate, used when the service reports no counts."""
    return TokenUsage(
        prompt_tokens=len(prompt.split()),
        completion_tokens=len(completion.split()),
    )


def _validate_messages(messages: Sequence[Message]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    body = list(messages)
    if body[0].role == "system":
        body = body[1:]
    if any(m.role == "system" for m in body):
        raise ValueError("only one leading system message is allowed")
    if not body or body[0].role != "user":
        raise ValueError("first non-system message must have role user")
    for prev, cur in zip(body, body[1:]):
        if prev.role == cur.role:
            raise ValueError("user/assistant roles must alternate")


def complete(
    engine: EngineDescriptor,
    messages: Sequence[Message],
    params: GenerationParams | None = None,
    trace: "Trace | None" = None,
    role: str | None = None,
    attempt_index: int | None = None,
    plan_index: int | None = None,
) -> Completion:
    """One engine call. Appends exactly one trace event, even on failure."""
    _validate_messages(messages)
    params = params or engine.default_params
    prompt = render_prompt(messages)
    start = time.monotonic()

    def _record(payload: dict, usage: TokenUsage | None = None) -> None:
        if trace is not None:
            trace.append(
                kind="engine_call",
                role=role,
                attempt_index=attempt_index,
                plan_index=plan_index,
                payload=payload,
                usage=usage,
                wall_time=time.monotonic() - start,
            )

    try:
        if engine.kind == "scripted":
            completion = _scripted_complete(engine, prompt, params)
            retry_count = 0
        else:
            completion, retry_count = _remote_complete(engine, messages, params)
    except Exception as exc:
        _record({"error": type(exc).__name__, "detail": str(exc)})
        raise

    _record(
        {
            "model": engine.model_name,
            "text": completion.text,
            "finish_reason": completion.finish_reason,
            "retry_count": retry_count,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        },
        usage=completion.usage,
    )
    return completion


def _scripted_complete(
    engine: EngineDescriptor, prompt: str, params: GenerationParams
) -> Completion:
    assert engine.script is not None
    text = engine.script.consume(prompt)
    return Completion(
        text=text,
        finish_reason="stop",
        usage=estimate_usage(prompt, text),
    )


def _remote_complete(
    engine: EngineDescriptor,
    messages: Sequence[Message],
    params: GenerationParams,
) -> tuple[Completion, int]:
    body: dict = {
        "model": engine.model_name,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    }
    if params.seed is not None:
        body["seed"] = params.seed
    if params.stop:
        body["stop"] = list(params.stop)

    headers = {"Content-Type": "application/json"}
    token = os.environ.get(engine.api_key_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"

    last_exc: Exception | None = None
    for attempt in range(engine.max_retries + 1):
        if attempt > 0:
            delay = engine.backoff_base * (2 ** (attempt - 1))
            time.sleep(delay * (1.0 + 0.1 * random.random()))
        try:
            resp = requests.post(
                engine.endpoint,
                json=body,
                headers=headers,
                timeout=engine.request_timeout,
            )
        except requests.Timeout as exc:
            last_exc = RequestTimeoutError(
                f"no response within {engine.request_timeout}s"
            )
            last_exc.__cause__ = exc
            continue
        except requests.RequestException as exc:
            last_exc = TransportError(str(exc))
            last_exc.__cause__ = exc
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last_exc = TransportError(f"HTTP {resp.status_code} from engine")
            continue
        if resp.status_code != 200:
            raise ProtocolError(f"HTTP {resp.status_code}: {resp.text[:500]}")
        return _parse_chat_response(resp, render_prompt(messages)), attempt

    assert last_exc is not None
    raise last_exc


def _parse_chat_response(resp: requests.Response, prompt: str) -> Completion:
    try:
        data = resp.json()
    except ValueError as exc:
        raise ProtocolError("response body is not JSON") from exc
    try:
        choice = data["choices"][0]
        text = choice["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed chat response: {str(data)[:500]}") from exc
    if text is None:
        raise ProtocolError("chat response carries null content")

    reason = choice.get("finish_reason", "stop")
    if reason in ("length", "max_tokens"):
        finish = "length"
    elif reason == "stop" or reason is None:
        finish = "stop"
    else:
        finish = "error"

    usage = data.get("usage") or {}
    try:
        token_usage = TokenUsage(
            prompt_tokens=int(usage["prompt_tokens"]),
            completion_tokens=int(usage["completion_tokens"]),
        )
    except (KeyError, TypeError, ValueError):
        token_usage = estimate_usage(prompt, text)
    return Completion(text=text, finish_reason=finish, usage=token_usage)
