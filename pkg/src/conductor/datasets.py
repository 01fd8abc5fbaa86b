"""Benchmark dataset ingestion: one JSON object per line.

Fields: id, prompt, optional answer, optional tests (list of
{stdin, expected_stdout}), optional category (math | code | science |
other, default other).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetParseError, DuplicateIdError
from .sandbox import TestCase

CATEGORIES = ("math", "code", "science", "other")


@dataclass(frozen=True)
class Problem:
    id: str
    prompt: str
    ground_truth: str | None = None
    tests: tuple[TestCase, ...] = ()
    category: str = "other"

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("problem id must be non-empty")
        if not self.prompt:
            raise ValueError("problem prompt must be non-empty")
        if self.category not in CATEGORIES:
            raise ValueError(f"bad problem category: {self.category!r}")


def _parse_problem(record: dict, line_number: int) -> Problem:
    if not isinstance(record, dict):
        raise DatasetParseError(
            f"line {line_number}: expected a JSON object", line_number
        )
    try:
        problem_id = record["id"]
        prompt = record["prompt"]
    except KeyError as exc:
        raise DatasetParseError(
            f"line {line_number}: missing required field {exc.args[0]!r}", line_number
        ) from exc
    if not isinstance(problem_id, str) or not isinstance(prompt, str):
        raise DatasetParseError(
            f"line {line_number}: id and prompt must be strings", line_number
        )

    answer = record.get("answer")
    if answer is not None and not isinstance(answer, str):
        answer = str(answer)

    tests: list[TestCase] = []
    for i, t in enumerate(record.get("tests") or []):
        try:
            tests.append(
                TestCase(stdin=str(t["stdin"]), expected_stdout=str(t["expected_stdout"]))
            )
        except (KeyError, TypeError) as exc:
            raise DatasetParseError(
                f"line {line_number}: test {i} needs stdin and expected_stdout",
                line_number,
            ) from exc

    category = record.get("category", "other")
    if category not in CATEGORIES:
        raise DatasetParseError(
            f"line {line_number}: unknown category {category!r}", line_number
        )
    try:
        return Problem(
            id=problem_id,
            prompt=prompt,
            ground_truth=answer,
            tests=tuple(tests),
            category=category,
        )
    except ValueError as exc:
        raise DatasetParseError(f"line {line_number}: {exc}", line_number) from exc


def load_dataset(path: str | Path) -> list[Problem]:
    """Parse a JSON-lines dataset file. Blank lines are skipped; duplicate
    ids and malformed lines are rejected with their line number."""
    path = Path(path)
    problems: list[Problem] = []
    seen: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(
                    f"line {line_number}: invalid JSON: {exc.msg}", line_number
                ) from exc
            problem = _parse_problem(record, line_number)
            if problem.id in seen:
                raise DuplicateIdError(
                    f"line {line_number}: duplicate problem id {problem.id!r} "
                    f"(first seen on line {seen[problem.id]})",
                    line_number,
                )
            seen[problem.id] = line_number
            problems.append(problem)
    return problems
