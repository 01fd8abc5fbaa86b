"""Process-level sandbox for model-generated programs.

Each run gets its own scratch directory and subprocess with a scrubbed
environment, a wall-clock limit, and capped captured output. This is a
containment convenience for benchmark code, not a security boundary
against adversarial programs.
"""

from __future__ import annotations

import os
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import SpawnError
from .extraction import CodeBlock

VERDICTS = ("ok", "nonzero_exit", "timeout", "spawn_error")

_LANGUAGE_ALIASES = {
    None: "python",
    "": "python",
    "py": "python",
    "python": "python",
    "python3": "python",
}

_EXTENSIONS = {"python": ".py"}

_KILL_GRACE = 2.0
_STDERR_TAIL = 2000


@dataclass(frozen=True)
class Limits:
    wall_time: float = 30.0
    output_bytes: int = 65536


@dataclass(frozen=True)
class ExecutionResult:
    stdout: str
    stderr: str
    exit_code: int
    duration: float
    verdict: str
    time_limit: float | None = None


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class, despite the name

    stdin: str
    expected_stdout: str


@dataclass(frozen=True)
class CaseResult:
    case: TestCase
    result: ExecutionResult
    passed: bool


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class, despite the name

    results: tuple[CaseResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def passed_count(self) -> int:
        return sum(1 for r in self.results if r.passed)


def _truncate(text: str, cap: int) -> str:
    if len(text.encode("utf-8", errors="replace")) <= cap:
        return text
    clipped = text.encode("utf-8", errors="replace")[:cap].decode("utf-8", errors="replace")
    return clipped + f"\n[truncated at {cap} bytes]"


def normalized_lines(text: str) -> list[str]:
    """Per-line trailing whitespace stripped, trailing blank lines dropped."""
    lines = [line.rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    return lines


def outputs_match(actual: str, expected: str) -> bool:
    return normalized_lines(actual) == normalized_lines(expected)


def _apply_rlimits(pid: int, wall_time: float) -> None:
    """Best-effort CPU and file-size caps, applied from the parent so the
    call is safe alongside worker threads."""
    try:
        import resource

        cpu = max(1, int(wall_time) + 5)
        resource.prlimit(pid, resource.RLIMIT_CPU, (cpu, cpu))
        resource.prlimit(pid, resource.RLIMIT_FSIZE, (64 * 1024 * 1024, 64 * 1024 * 1024))
    except (ImportError, AttributeError, OSError):
        pass


@dataclass
class Sandbox:
    """Runs code blocks under a configured interpreter with limits."""

    interpreters: dict[str, str] = field(default_factory=lambda: {"python": sys.executable})
    scratch_root: str | None = None
    limits: Limits = field(default_factory=Limits)

    def _interpreter_for(self, block: CodeBlock) -> tuple[str, str]:
        hint = (block.language_hint or "").lower() or None
        language = _LANGUAGE_ALIASES.get(hint, hint)
        interpreter = self.interpreters.get(language or "")
        if interpreter is None:
            raise SpawnError(f"no interpreter configured for language {language!r}")
        return language, interpreter

    def run(
        self,
        code: CodeBlock,
        stdin: str = "",
        limits: Limits | None = None,
    ) -> ExecutionResult:
        """Execute one program: fresh scratch dir, piped stdin, hard wall clock.

        The whole process group is killed at the limit, so grandchildren
        cannot outlive the run.
        """
        limits = limits or self.limits
        language, interpreter = self._interpreter_for(code)
        if shutil.which(interpreter) is None and not Path(interpreter).exists():
            raise SpawnError(f"interpreter not found: {interpreter}")

        if self.scratch_root:
            Path(self.scratch_root).mkdir(parents=True, exist_ok=True)
        scratch = tempfile.mkdtemp(prefix="sbx-", dir=self.scratch_root)
        program = Path(scratch) / f"prog{_EXTENSIONS.get(language, '')}"
        program.write_text(code.body + "\n", encoding="utf-8")

        env = {
            "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
            "HOME": scratch,
            "TMPDIR": scratch,
            "LANG": "C.UTF-8",
            "PYTHONDONTWRITEBYTECODE": "1",
            "PYTHONIOENCODING": "utf-8",
        }
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                [interpreter, str(program)],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                cwd=scratch,
                env=env,
                text=True,
                start_new_session=True,
            )
        except OSError as exc:
            shutil.rmtree(scratch, ignore_errors=True)
            raise SpawnError(f"could not start {interpreter}: {exc}") from exc
        _apply_rlimits(proc.pid, limits.wall_time)

        timed_out = False
        try:
            stdout, stderr = proc.communicate(input=stdin, timeout=limits.wall_time)
        except subprocess.TimeoutExpired:
            timed_out = True
            _kill_process_group(proc)
            try:
                stdout, stderr = proc.communicate(timeout=_KILL_GRACE)
            except subprocess.TimeoutExpired:  # pragma: no cover - last resort
                proc.kill()
                stdout, stderr = "", ""
        duration = time.monotonic() - start
        shutil.rmtree(scratch, ignore_errors=True)

        if timed_out:
            verdict = "timeout"
        elif proc.returncode == 0:
            verdict = "ok"
        else:
            verdict = "nonzero_exit"
        return ExecutionResult(
            stdout=_truncate(stdout or "", limits.output_bytes),
            stderr=_truncate(stderr or "", limits.output_bytes),
            exit_code=proc.returncode if proc.returncode is not None else -1,
            duration=duration,
            verdict=verdict,
            time_limit=limits.wall_time,
        )

    def run_tests(
        self,
        code: CodeBlock,
        tests: Sequence[TestCase],
        limits: Limits | None = None,
    ) -> TestReport:
        """Run the program once per case. Never short-circuits, so the
        feedback lists every failure."""
        if not tests:
            raise ValueError("run_tests requires at least one test case")
        results = []
        for case in tests:
            result = self.run(code, stdin=case.stdin, limits=limits)
            passed = result.verdict == "ok" and outputs_match(
                result.stdout, case.expected_stdout
            )
            results.append(CaseResult(case=case, result=result, passed=passed))
        return TestReport(results=tuple(results))


def _kill_process_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):  # pragma: no cover
        proc.kill()


def format_feedback(code: CodeBlock, outcome: ExecutionResult | TestReport) -> str:
    """Deterministic feedback block describing what went wrong.

    For crashes: the stderr tail. For failed tests: every failing case's
    stdin, expected, and actual output, in case order.
    """
    if isinstance(outcome, ExecutionResult):
        return _result_feedback(outcome)
    parts = []
    for i, case_result in enumerate(outcome.results, start=1):
        if case_result.passed:
            continue
        result = case_result.result
        if result.verdict != "ok":
            parts.append(f"Test {i} crashed:\n{_result_feedback(result)}")
        else:
            parts.append(
                f"Test {i} produced incorrect output.\n"
                f"input:\n{case_result.case.stdin.rstrip()}\n"
                f"expected:\n{case_result.case.expected_stdout.rstrip()}\n"
                f"actual:\n{result.stdout.rstrip()}"
            )
    if not parts:
        return "All tests passed."
    return "\n\n".join(parts)


def _result_feedback(result: ExecutionResult) -> str:
    if result.verdict == "timeout":
        limit = result.time_limit if result.time_limit is not None else result.duration
        return f"TIMEOUT after {limit:g}s: the program was killed before finishing."
    if result.verdict == "spawn_error":
        return "The interpreter could not be started."
    if result.verdict == "nonzero_exit":
        tail = result.stderr[-_STDERR_TAIL:]
        return f"The program exited with code {result.exit_code}. stderr:\n{tail}"
    if not result.stdout.strip():
        return "The program ran but printed nothing to stdout."
    return f"The program printed:\n{result.stdout.rstrip()}"
