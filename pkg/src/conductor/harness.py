"""Batch runner: concurrent pipeline dispatch, trace persistence, scoring.

One trace file per problem, one JSON report per batch. Problems with a
ground-truth answer are scored by canonical equality; refinement runs on
test-carrying problems are scored by their public tests. Problems with
neither are recorded as unscored and excluded from the accuracy and
recall denominators, without aborting the batch.
"""

from __future__ import annotations

import concurrent.futures
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agents import PromptRegistry, Runtime, default_role_configs
from .datasets import Problem
from .engine import EngineDescriptor, TokenUsage
from .errors import MissingGroundTruth
from .extraction import normalize
from .pipelines import PIPELINES, PipelineConfig, RunResult, recall_at_best_of_n
from .sandbox import Sandbox
from .trace import Trace, read_trace

_ID_SAFE_RE = re.compile(r"[^A-Za-z0-9._-]+")


@dataclass(frozen=True)
class ProblemOutcome:
    id: str
    final_answer: str
    correct: bool | None  # None: unscorable (no ground truth, no tests)
    exit_point: str
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "final_answer": self.final_answer,
            "correct": self.correct,
            "exit_point": self.exit_point,
            "error": self.error,
        }


@dataclass
class Report:
    dataset_id: str
    pipeline: str
    accuracy: float
    recall_at_best_of_n: float
    exit_point_histogram: dict[str, int]
    token_totals: TokenUsage
    per_problem: list[ProblemOutcome] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.accuracy > self.recall_at_best_of_n + 1e-12:
            raise AssertionError(
                f"accuracy {self.accuracy} exceeds recall@best_of_N "
                f"{self.recall_at_best_of_n}"
            )

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "pipeline": self.pipeline,
            "accuracy": self.accuracy,
            "recall_at_best_of_n": self.recall_at_best_of_n,
            "exit_point_histogram": dict(sorted(self.exit_point_histogram.items())),
            "token_totals": {
                "prompt_tokens": self.token_totals.prompt_tokens,
                "completion_tokens": self.token_totals.completion_tokens,
                "total": self.token_totals.total,
            },
            "per_problem": [p.to_dict() for p in self.per_problem],
        }

    def save(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


def trace_filename(problem_id: str) -> str:
    return _ID_SAFE_RE.sub("_", problem_id) + ".jsonl"


def _score(problem: Problem, result: RunResult) -> tuple[bool | None, list[bool]]:
    """Correctness of the final answer plus per-attempt correctness flags.

    Raises MissingGroundTruth when the problem offers nothing to score
    against (the batch runner records such problems as unscored).
    """
    if result.pipeline == "refine":
        flags = [r.all_passed for r in result.test_reports]
        if result.chosen_version < 0:
            return False, flags or [False]
        return flags[result.chosen_version], flags or [False]
    if problem.ground_truth is None:
        raise MissingGroundTruth(f"problem {problem.id!r} has no ground truth")
    truth = normalize(problem.ground_truth)
    correct = bool(result.final_answer) and normalize(result.final_answer) == truth
    flags = [c.canonical == truth for c in result.all_candidates]
    return correct, flags or [False]


def _fix_seeds(roles: dict) -> dict:
    fixed = {}
    for name, cfg in roles.items():
        params = cfg.params
        if params.seed is None:
            params = replace(params, seed=0)
        fixed[name] = replace(cfg, params=params)
    return fixed


def run_benchmark(
    dataset: list[Problem],
    pipeline_name: str,
    cfg: PipelineConfig,
    engine: EngineDescriptor,
    out_dir: str | Path | None = None,
    dataset_id: str = "dataset",
    deterministic: bool = False,
    registry: PromptRegistry | None = None,
    roles: dict | None = None,
    sandbox: Sandbox | None = None,
) -> Report:
    """Run every problem through the named pipeline and score the batch.

    Problems are dispatched concurrently up to cfg.parallelism (scripted
    engines run single-threaded so script consumption stays ordered).
    Per-problem failures are recorded in the report, never raised.
    """
    if not dataset:
        raise ValueError("run_benchmark requires a non-empty dataset")
    if pipeline_name not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline_name!r}")
    pipeline = PIPELINES[pipeline_name]
    registry = registry or PromptRegistry.builtin()
    roles = roles or default_role_configs()
    if deterministic:
        roles = _fix_seeds(roles)
    sandbox = sandbox or Sandbox()
    traces_dir = Path(out_dir) / "traces" if out_dir is not None else None

    def _run_one(problem: Problem) -> tuple[Problem, RunResult | None, str | None, Trace]:
        trace_path = traces_dir / trace_filename(problem.id) if traces_dir else None
        trace = Trace(run_id=problem.id, path=trace_path, deterministic=deterministic)
        rt = Runtime(
            engine=engine,
            trace=trace,
            registry=registry,
            roles=roles,
            sandbox=sandbox,
        )
        result: RunResult | None = None
        error: str | None = None
        try:
            result = pipeline(rt, problem, cfg)
        except Exception as exc:  # any per-problem failure stays per-problem
            error = f"{type(exc).__name__}: {exc}"
        finally:
            trace.close()
        return problem, result, error, trace

    workers = 1 if engine.kind == "scripted" else max(1, cfg.parallelism)
    if workers <= 1 or len(dataset) <= 1:
        runs = [_run_one(p) for p in dataset]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, dataset))

    outcomes: list[ProblemOutcome] = []
    flags_per_problem: list[list[bool]] = []
    corrects: list[bool] = []
    histogram: dict[str, int] = {}
    usage = TokenUsage()
    for problem, result, error, trace in runs:
        usage = usage + trace.total_usage()
        if result is None:
            outcomes.append(
                ProblemOutcome(
                    id=problem.id,
                    final_answer="",
                    correct=False,
                    exit_point="error",
                    error=error,
                )
            )
            histogram["error"] = histogram.get("error", 0) + 1
            corrects.append(False)
            flags_per_problem.append([False])
            continue
        try:
            correct, flags = _score(problem, result)
        except MissingGroundTruth:
            correct, flags = None, []
        outcomes.append(
            ProblemOutcome(
                id=problem.id,
                final_answer=result.final_answer,
                correct=correct,
                exit_point=result.exit_point,
            )
        )
        histogram[result.exit_point] = histogram.get(result.exit_point, 0) + 1
        if correct is not None:
            corrects.append(correct)
            flags_per_problem.append(flags)

    accuracy = sum(corrects) / len(corrects) if corrects else 0.0
    recall = recall_at_best_of_n(flags_per_problem) if flags_per_problem else 0.0
    report = Report(
        dataset_id=dataset_id,
        pipeline=pipeline_name,
        accuracy=accuracy,
        recall_at_best_of_n=recall,
        exit_point_histogram=histogram,
        token_totals=usage,
        per_problem=outcomes,
    )
    if out_dir is not None:
        report.save(Path(out_dir) / "report.json")
    return report


def score_traces(
    traces_dir: str | Path,
    dataset: list[Problem],
    dataset_id: str = "dataset",
) -> Report:
    """Rebuild a report from persisted traces, without rerunning anything."""
    traces_dir = Path(traces_dir)
    by_id = {p.id: p for p in dataset}
    outcomes: list[ProblemOutcome] = []
    flags_per_problem: list[list[bool]] = []
    corrects: list[bool] = []
    histogram: dict[str, int] = {}
    usage = TokenUsage()
    pipeline_name = "unknown"

    for problem in dataset:
        path = traces_dir / trace_filename(problem.id)
        if not path.exists():
            outcomes.append(
                ProblemOutcome(
                    id=problem.id,
                    final_answer="",
                    correct=False,
                    exit_point="error",
                    error="trace file missing",
                )
            )
            histogram["error"] = histogram.get("error", 0) + 1
            corrects.append(False)
            flags_per_problem.append([False])
            continue
        events = read_trace(path)
        for ev in events:
            if ev.kind == "engine_call" and ev.usage is not None:
                usage = usage + ev.usage
        finals = [
            ev for ev in events if ev.kind == "decision" and ev.payload.get("final")
        ]
        if not finals:
            outcomes.append(
                ProblemOutcome(
                    id=problem.id,
                    final_answer="",
                    correct=False,
                    exit_point="error",
                    error="incomplete trace",
                )
            )
            histogram["error"] = histogram.get("error", 0) + 1
            corrects.append(False)
            flags_per_problem.append([False])
            continue
        payload = finals[-1].payload
        pipeline_name = payload.get("pipeline", pipeline_name)
        final_answer = payload["final_answer"]
        exit_point = payload["exit_point"]
        histogram[exit_point] = histogram.get(exit_point, 0) + 1

        if "all_passed_flags" in payload:  # refinement run: score by tests
            flags = list(payload["all_passed_flags"])
            chosen = payload.get("chosen_index", -1)
            correct = flags[chosen] if 0 <= chosen < len(flags) else False
            corrects.append(correct)
            flags_per_problem.append(flags or [False])
        elif by_id[problem.id].ground_truth is not None:
            truth = normalize(by_id[problem.id].ground_truth)
            correct = bool(final_answer) and normalize(final_answer) == truth
            flags = [c["canonical"] == truth for c in payload["candidates"]]
            corrects.append(correct)
            flags_per_problem.append(flags or [False])
        else:
            correct = None
        outcomes.append(
            ProblemOutcome(
                id=problem.id,
                final_answer=final_answer,
                correct=correct,
                exit_point=exit_point,
            )
        )

    accuracy = sum(corrects) / len(corrects) if corrects else 0.0
    recall = recall_at_best_of_n(flags_per_problem) if flags_per_problem else 0.0
    return Report(
        dataset_id=dataset_id,
        pipeline=pipeline_name,
        accuracy=accuracy,
        recall_at_best_of_n=recall,
        exit_point_histogram=histogram,
        token_totals=usage,
        per_problem=outcomes,
    )
