"""Test-driven iterative refinement of generated programs.

The engine's program is run against the problem's public tests; on
failure the original prompt is reformulated with the execution feedback
appended and an instruction to correct the previous mistakes, and the
program is regenerated, up to a fixed iteration budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .agents import Runtime
from .errors import NoCodeError
from .extraction import CodeBlock, extract_code_block
from .sandbox import Limits, TestCase, TestReport, format_feedback

_NO_CODE_FEEDBACK = (
    "Your reply contained no fenced code block. Reply with one fenced "
    "code block containing the complete program."
)


@dataclass(frozen=True)
class CodeVersion:
    code: CodeBlock
    transcript: str
    report: TestReport


@dataclass
class RefinementOutcome:
    versions: list[CodeVersion]
    chosen_index: int  # -1 when no version ever produced code
    rounds: int  # regeneration rounds actually entered

    @property
    def chosen(self) -> CodeVersion | None:
        if self.chosen_index < 0:
            return None
        return self.versions[self.chosen_index]

    @property
    def converged(self) -> bool:
        return self.chosen is not None and self.chosen.report.all_passed


def best_version_index(scores: Sequence[int]) -> int:
    """Most tests passed, earliest version on ties."""
    if not scores:
        return -1
    best = max(scores)
    return scores.index(best)


def refine_with_feedback(
    rt: Runtime,
    question: str,
    tests: Sequence[TestCase],
    max_iters: int,
    role: str = "execute",
    attempt_index: int = 0,
    limits: Limits | None = None,
) -> RefinementOutcome:
    """Generate, test, and repair a program until the tests pass or the
    iteration budget runs out. All test cases run on every version so the
    feedback lists every failure, and the budget-exhausted fallback is the
    best-scoring earliest version."""
    if rt.sandbox is None:
        raise ValueError("refinement requires a sandbox")
    if not tests:
        raise ValueError("refinement requires at least one public test")

    versions: list[CodeVersion] = []
    feedback: str | None = None
    rounds = 0
    for iteration in range(max_iters + 1):
        prompt = rt.registry.render(
            rt.roles[role].template_id,
            question=question,
            plan=None,
            feedback=feedback,
        )
        completion = rt.ask(role, prompt, attempt_index)
        rounds = iteration
        try:
            block = extract_code_block(completion.text)
        except NoCodeError:
            feedback = _NO_CODE_FEEDBACK
            continue
        report = rt.sandbox.run_tests(block, tests, limits=limits)
        rt.trace.append(
            kind="sandbox_run",
            role=role,
            attempt_index=attempt_index,
            payload={
                "iteration": iteration,
                "passed": report.passed_count,
                "total": len(report.results),
                "verdicts": [r.result.verdict for r in report.results],
            },
            wall_time=sum(r.result.duration for r in report.results),
        )
        versions.append(CodeVersion(code=block, transcript=completion.text, report=report))
        if report.all_passed:
            break
        feedback = format_feedback(block, report)

    chosen = best_version_index([v.report.passed_count for v in versions])
    return RefinementOutcome(versions=versions, chosen_index=chosen, rounds=rounds)
