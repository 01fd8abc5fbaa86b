"""Turn free-form engine output into comparable answers and code blocks.

All voting operates on the canonical form produced here, so this module
defines answer equality for the whole package: canonical-string equality
after numeric/rational reduction. Full LaTeX simplification is out of
scope on purpose; reasoning benchmarks with integer answers do not need
it, and text answers degrade to lowercased trimmed strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ExtractionError, NoCodeError

ANSWER_SOURCES = ("baseline", "coding", "simple", "reflection")

DEFAULT_ANSWER_MARKERS = ("final answer", "answer is", "answer:")

_FRACTION_RE = re.compile(r"\\[dtc]?frac\s*\{\s*([^{}]*?)\s*\}\s*\{\s*([^{}]*?)\s*\}")
_RATIONAL_RE = re.compile(r"^[+-]?\d+\s*/\s*\d+$")
_DECIMAL_RE = re.compile(r"^[+-]?\d+\.\d+$")
_CHOICE_RE = re.compile(r"^[\(\[\{]?\s*([A-Da-d])\s*[\)\]\}]?$")
_DIGIT_COMMA_RE = re.compile(r"(?<=\d),(?=\d)")
_FENCE_RE = re.compile(r"^\s*```([^\s`]*)\s*$")

_QUOTE_WS = " \t\r\n\"'`"
_TRAILING_PUNCT = ".,;:!?"


@dataclass(frozen=True)
class CandidateAnswer:
    """An extracted answer plus where it came from."""

    raw: str
    canonical: str
    source: str = "baseline"
    attempt_index: int = 0

    def __post_init__(self) -> None:
        if self.source not in ANSWER_SOURCES:
            raise ValueError(f"bad answer source: {self.source!r}")


@dataclass(frozen=True)
class CodeBlock:
    body: str
    language_hint: str | None = None


def _strip_wrappers(text: str) -> str:
    """Peel math-mode delimiters, \\boxed/\\text shells, and punctuation.

    Punctuation is stripped from the right only, so answers like ".5"
    keep their leading decimal point.
    """
    prev = None
    while prev != text:
        prev = text
        text = text.strip(_QUOTE_WS).rstrip(_TRAILING_PUNCT)
        for left, right in (("$$", "$$"), ("$", "$"), (r"\(", r"\)"), (r"\[", r"\]")):
            if text.startswith(left) and text.endswith(right) and len(text) > len(left) + len(right) - 1:
                text = text[len(left):len(text) - len(right)]
        for shell in (r"\boxed", r"\text", r"\mathrm"):
            if text.startswith(shell + "{") and text.endswith("}"):
                inner = text[len(shell) + 1:-1]
                if inner.count("{") == inner.count("}"):
                    text = inner
    return text


def normalize(raw: str) -> str:
    """Canonical form used for all answer equality. Total and idempotent."""
    text = _strip_wrappers(raw)
    text = _FRACTION_RE.sub(lambda m: f"{m.group(1)}/{m.group(2)}", text)
    text = text.replace(r"\,", "").replace(r"\;", "").replace(r"\!", "")
    text = _DIGIT_COMMA_RE.sub("", text)
    text = _strip_wrappers(text)

    compact = text.replace(" ", "")
    try:
        return str(int(compact))
    except ValueError:
        pass
    if _RATIONAL_RE.match(compact):
        try:
            frac = Fraction(compact)
        except ZeroDivisionError:
            return text.lower()
        if frac.denominator == 1:
            return str(frac.numerator)
        return f"{frac.numerator}/{frac.denominator}"
    if _DECIMAL_RE.match(compact):
        trimmed = compact.rstrip("0").rstrip(".")
        return trimmed if trimmed not in ("", "+", "-") else "0"
    choice = _CHOICE_RE.match(text)
    if choice:
        return choice.group(1).upper()
    return text.lower()


def _last_boxed_span(text: str) -> str | None:
    """Contents of the last \\boxed{...}, with nested braces matched."""
    marker = r"\boxed{"
    start = text.rfind(marker)
    if start < 0:
        return None
    depth = 1
    i = start + len(marker)
    begin = i
    while i < len(text):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return text[begin:i]
        i += 1
    return text[begin:]  # unterminated (truncated completion): take the rest


def _marker_answer(lines: list[str], markers: Sequence[str]) -> str | None:
    for idx in range(len(lines) - 1, -1, -1):
        lowered = lines[idx].lower()
        for marker in markers:
            pos = lowered.rfind(marker)
            if pos < 0:
                continue
            after = lines[idx][pos + len(marker):].strip(" \t:=-")
            if after:
                return after
            for rest in lines[idx + 1:]:
                if rest.strip():
                    return rest.strip()
    return None


def extract_final_answer(
    text: str,
    source: str = "baseline",
    attempt_index: int = 0,
    markers: Sequence[str] = DEFAULT_ANSWER_MARKERS,
) -> CandidateAnswer:
    """Pull the committed answer out of a completion.

    Precedence: last \\boxed expression, then the last line carrying an
    answer marker, then the trimmed final non-empty line. Reasoning models
    restate earlier wrong candidates, so the final statement wins.
    """
    if not text.strip():
        raise ExtractionError("cannot extract an answer from empty text")

    raw = _last_boxed_span(text)
    if raw is None:
        lines = text.splitlines()
        raw = _marker_answer(lines, markers)
    if raw is None:
        raw = next(line.strip() for line in reversed(text.splitlines()) if line.strip())
    return CandidateAnswer(
        raw=raw,
        canonical=normalize(raw),
        source=source,
        attempt_index=attempt_index,
    )


def extract_code_block(text: str) -> CodeBlock:
    """Last fenced code block in a completion.

    Blocks with empty bodies are ignored; an unclosed final fence (the
    model hit its token limit) is read through to the end of the text.
    """
    blocks: list[CodeBlock] = []
    lang: str | None = None
    body_lines: list[str] | None = None
    for line in text.splitlines():
        fence = _FENCE_RE.match(line)
        if fence and body_lines is None:
            lang = fence.group(1) or None
            body_lines = []
        elif fence is not None and body_lines is not None:
            body = "\n".join(body_lines).strip("\n")
            if body.strip():
                blocks.append(CodeBlock(body=body, language_hint=lang))
            body_lines = None
            lang = None
        elif body_lines is not None:
            body_lines.append(line)
    if body_lines is not None:  # unterminated fence
        body = "\n".join(body_lines).strip("\n")
        if body.strip():
            blocks.append(CodeBlock(body=body, language_hint=lang))
    if not blocks:
        raise NoCodeError("completion carries no fenced code block")
    return blocks[-1]
