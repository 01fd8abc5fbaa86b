"""The orchestration pipelines.

Three entry points:

- run_simple: plan -> execute (n_plans per attempt) -> reflect -> verify,
  repeated best_of_n times, with ablation flags for the planner and the
  reflection stage.
- run_adaptive: an escalation cascade for math problems. A cheap direct
  pass exits early on a unanimous-plurality strict majority; a coding
  pass exits on a strict majority of program outputs; otherwise full
  simple-pipeline attempts run and a global plurality over every
  candidate decides.
- run_refinement: test-driven program repair against public tests.

Every run leaves a trace whose vote and decision events carry enough of
their inputs to be recomputed and checked offline.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, TypeVar

from .agents import Runtime, code_solve, execute, plan, reflect, verify
from .datasets import Problem
from .errors import EngineUnavailable, TransportError
from .extraction import CandidateAnswer
from .refinement import refine_with_feedback
from .sandbox import TestReport
from .voting import (
    VoteOutcome,
    plurality_vote,
    resolve_final,
    strict_majority,
)

EXIT_POINTS = ("baseline_early", "coding_early", "global")

PASS_BASELINE = "baseline"
PASS_CODING = "coding"
PASS_SIMPLE = "simple"

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class PipelineConfig:
    """All pipeline parameters plus ablation flags."""

    best_of_n: int = 3
    n_plans: int = 2
    num_attempts_baseline: int = 3
    num_attempts_coding: int = 3
    num_attempts_simple: int = 1
    without_planner: bool = False
    without_reflection: bool = False
    verify_mode: str = "vote"  # "vote" | "judge"
    max_refinement_iters: int = 3
    max_code_repairs: int = 2
    parallelism: int = 1

    def __post_init__(self) -> None:
        counts = {
            "best_of_n": self.best_of_n,
            "n_plans": self.n_plans,
            "num_attempts_baseline": self.num_attempts_baseline,
            "num_attempts_coding": self.num_attempts_coding,
            "num_attempts_simple": self.num_attempts_simple,
            "max_refinement_iters": self.max_refinement_iters,
            "parallelism": self.parallelism,
        }
        for name, value in counts.items():
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.max_code_repairs < 0:
            raise ValueError("max_code_repairs must be >= 0")
        if self.verify_mode not in ("vote", "judge"):
            raise ValueError(f"verify_mode must be vote or judge, got {self.verify_mode!r}")


@dataclass
class RunResult:
    final_answer: str
    all_candidates: list[CandidateAnswer]
    per_pass_outcomes: dict[str, VoteOutcome]
    exit_point: str
    trace_id: str
    pipeline: str = ""
    test_reports: list[TestReport] = field(default_factory=list)
    chosen_version: int = -1
    refinement_rounds: int = 0


def _effective_workers(rt: Runtime, cfg: PipelineConfig) -> int:
    # Scripted scenarios stay single-threaded so script consumption order
    # (and therefore the trace) is reproducible.
    if rt.engine.kind == "scripted":
        return 1
    return cfg.parallelism


def _map_ordered(
    fn: Callable[[T], R], items: Sequence[T], workers: int
) -> list[R]:
    """Apply fn to items, preserving input order in the result list."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _vote_event(
    rt: Runtime,
    routine: str,
    pass_label: str,
    inputs: Sequence[CandidateAnswer],
    outcome: VoteOutcome,
) -> None:
    rt.trace.append(
        kind="vote",
        payload={
            "routine": routine,
            "pass": pass_label,
            "inputs": [c.canonical for c in inputs],
            "outcome": outcome.to_payload(),
        },
    )


def _resolve_event(rt: Runtime, pass_label: str, modes, pool, chosen: str) -> None:
    rt.trace.append(
        kind="vote",
        payload={
            "routine": "resolve_final",
            "pass": pass_label,
            "modes": sorted(modes),
            "pool": [c.canonical for c in pool],
            "chosen": chosen,
        },
    )


def _candidate_payload(candidates: Sequence[CandidateAnswer]) -> list[dict]:
    return [
        {"canonical": c.canonical, "source": c.source, "attempt_index": c.attempt_index}
        for c in candidates
    ]


def _decision_event(rt: Runtime, payload: dict[str, Any]) -> None:
    rt.trace.append(kind="decision", payload=payload)


def _wrap_engine_failures(exc: Exception) -> Exception:
    if isinstance(exc, TransportError):
        return EngineUnavailable(f"engine stopped responding: {exc}")
    return exc


def run_simple(
    rt: Runtime,
    problem: Problem,
    cfg: PipelineConfig,
    final_decision: bool = True,
) -> RunResult:
    """best_of_n attempts of (n_plans x plan+execute) -> reflect -> verify.

    Exactly best_of_n*n_plans executor calls are made; the planner and
    reflection stages are skipped entirely under their ablation flags,
    with execution answers carried forward directly when reflection is
    off. Exit point is always "global" (the pipeline has no early exits).
    """
    question = problem.prompt
    workers = _effective_workers(rt, cfg)
    pairs = [
        (i, j)
        for i in range(1, cfg.best_of_n + 1)
        for j in range(1, cfg.n_plans + 1)
    ]

    def _one_pair(pair: tuple[int, int]):
        i, j = pair
        plan_ = None
        if not cfg.without_planner:
            plan_ = plan(rt, question, attempt_index=i, plan_index=j)
        return execute(
            rt,
            question,
            plan_,
            source="baseline",
            attempt_index=i,
            plan_index=j,
            tests=problem.tests,
            max_refinement_iters=cfg.max_refinement_iters if problem.tests else 0,
        )

    try:
        executions = _map_ordered(_one_pair, pairs, workers)
        by_attempt: dict[int, list] = {}
        for (i, _j), ex in zip(pairs, executions):
            by_attempt.setdefault(i, []).append(ex)

        candidates: list[CandidateAnswer] = []
        if cfg.without_reflection:
            for ex in executions:
                if ex.answer is not None:
                    candidates.append(ex.answer)
        else:
            syntheses = _map_ordered(
                lambda i: reflect(rt, question, by_attempt[i], attempt_index=i),
                sorted(by_attempt),
                workers,
            )
            candidates = [s.answer for s in syntheses if s.answer is not None]

        per_pass: dict[str, VoteOutcome] = {}
        routine = "none"
        final = ""
        if candidates:
            verdict = verify(
                rt, question, candidates, mode=cfg.verify_mode, pass_label="verify"
            )
            final = verdict.answer.canonical
            routine = verdict.routine
            per_pass["verify"] = verdict.outcome
    except Exception as exc:
        raise _wrap_engine_failures(exc) from exc

    _decision_event(
        rt,
        {
            "pipeline": "simple",
            "final": final_decision,
            "exit_point": "global",
            "final_answer": final,
            "candidates": _candidate_payload(candidates),
            "verify_routine": routine,
            "per_pass": {k: v.to_payload() for k, v in per_pass.items()},
        },
    )
    return RunResult(
        final_answer=final,
        all_candidates=candidates,
        per_pass_outcomes=per_pass,
        exit_point="global",
        trace_id=rt.trace.run_id,
        pipeline="simple",
    )


def run_adaptive(rt: Runtime, problem: Problem, cfg: PipelineConfig) -> RunResult:
    """Escalation cascade: direct pass, coding pass, simple-pipeline pass.

    Cheap passes exit early when their vote condition holds, so easy
    problems consume strictly less engine time than hard ones. Failed
    coding attempts contribute nothing to the pool rather than a sentinel
    vote. Candidate pool order is baseline, then coding, then simple.
    """
    question = problem.prompt
    workers = _effective_workers(rt, cfg)
    pool_all: list[CandidateAnswer] = []
    pools: dict[str, list[str]] = {PASS_BASELINE: [], PASS_CODING: [], PASS_SIMPLE: []}
    per_pass: dict[str, VoteOutcome] = {}

    def _finish(final: str, exit_point: str) -> RunResult:
        _decision_event(
            rt,
            {
                "pipeline": "adaptive",
                "final": True,
                "exit_point": exit_point,
                "final_answer": final,
                "pools": pools,
                "candidates": _candidate_payload(pool_all),
                "per_pass": {k: v.to_payload() for k, v in per_pass.items()},
            },
        )
        return RunResult(
            final_answer=final,
            all_candidates=pool_all,
            per_pass_outcomes=per_pass,
            exit_point=exit_point,
            trace_id=rt.trace.run_id,
            pipeline="adaptive",
        )

    try:
        # Direct executor pass.
        baseline_execs = _map_ordered(
            lambda i: execute(rt, question, None, source="baseline", attempt_index=i),
            list(range(1, cfg.num_attempts_baseline + 1)),
            workers,
        )
        baseline = [ex.answer for ex in baseline_execs if ex.answer is not None]
        pool_all.extend(baseline)
        pools[PASS_BASELINE] = [c.canonical for c in baseline]
        if baseline:
            pv = plurality_vote(baseline)
            _vote_event(rt, "plurality_vote", PASS_BASELINE, baseline, pv)
            sm = strict_majority(baseline)
            _vote_event(rt, "strict_majority", PASS_BASELINE, baseline, sm)
            per_pass[PASS_BASELINE] = pv
            # Both checks kept, mirroring the documented early-exit rule,
            # even though a strict majority implies a unique plurality.
            if len(pv.modes) == 1 and sm.has_majority:
                return _finish(next(iter(pv.modes)), "baseline_early")

        # Coding pass.
        coding_execs = _map_ordered(
            lambda i: code_solve(
                rt, question, attempt_index=i, max_repairs=cfg.max_code_repairs
            ),
            list(range(1, cfg.num_attempts_coding + 1)),
            workers,
        )
        coding = [ex.answer for ex in coding_execs if ex.answer is not None]
        pool_all.extend(coding)
        pools[PASS_CODING] = [c.canonical for c in coding]
        sm_coding = strict_majority(coding)
        _vote_event(rt, "strict_majority", PASS_CODING, coding, sm_coding)
        per_pass[PASS_CODING] = sm_coding
        if sm_coding.has_majority:
            assert sm_coding.winner is not None
            return _finish(sm_coding.winner, "coding_early")

        # Full simple-pipeline passes.
        simple_answers: list[CandidateAnswer] = []
        for i in range(1, cfg.num_attempts_simple + 1):
            sub = run_simple(rt, problem, cfg, final_decision=False)
            if sub.final_answer:
                simple_answers.append(
                    CandidateAnswer(
                        raw=sub.final_answer,
                        canonical=sub.final_answer,
                        source="simple",
                        attempt_index=i,
                    )
                )
        pool_all.extend(simple_answers)
        pools[PASS_SIMPLE] = [c.canonical for c in simple_answers]

        # Global aggregation over every candidate collected.
        if not pool_all:
            return _finish("", "global")
        pv_all = plurality_vote(pool_all)
        _vote_event(rt, "plurality_vote", "global", pool_all, pv_all)
        per_pass["global"] = pv_all
        final = resolve_final(pv_all.modes, pool_all)
        _resolve_event(rt, "global", pv_all.modes, pool_all, final)
    except Exception as exc:
        raise _wrap_engine_failures(exc) from exc
    return _finish(final, "global")


def run_refinement(rt: Runtime, problem: Problem, cfg: PipelineConfig) -> RunResult:
    """Generate a program, run the public tests, and repair from feedback.

    Convergence stops the loop; budget exhaustion falls back to the
    best-scoring earliest version. The final answer is the chosen
    program's text.
    """
    if not problem.tests:
        raise ValueError("refinement pipeline requires a problem with public tests")
    try:
        outcome = refine_with_feedback(
            rt,
            problem.prompt,
            problem.tests,
            max_iters=cfg.max_refinement_iters,
            role="execute",
        )
    except Exception as exc:
        raise _wrap_engine_failures(exc) from exc

    candidates = [
        CandidateAnswer(
            raw=v.code.body,
            canonical=v.code.body,
            source="baseline",
            attempt_index=k,
        )
        for k, v in enumerate(outcome.versions)
    ]
    final = outcome.chosen.code.body if outcome.chosen is not None else ""
    scores = [v.report.passed_count for v in outcome.versions]
    _decision_event(
        rt,
        {
            "pipeline": "refine",
            "final": True,
            "exit_point": "global",
            "final_answer": final,
            "candidates": _candidate_payload(candidates),
            "scores": scores,
            "totals": [len(v.report.results) for v in outcome.versions],
            "all_passed_flags": [v.report.all_passed for v in outcome.versions],
            "chosen_index": outcome.chosen_index,
            "rounds": outcome.rounds,
        },
    )
    return RunResult(
        final_answer=final,
        all_candidates=candidates,
        per_pass_outcomes={},
        exit_point="global",
        trace_id=rt.trace.run_id,
        pipeline="refine",
        test_reports=[v.report for v in outcome.versions],
        chosen_version=outcome.chosen_index,
        refinement_rounds=outcome.rounds,
    )


PIPELINES: dict[str, Callable[[Runtime, Problem, PipelineConfig], RunResult]] = {
    "simple": run_simple,
    "adaptive": run_adaptive,
    "refine": run_refinement,
}


def recall_at_best_of_n(attempt_correctness: Sequence[Sequence[bool]]) -> float:
    """Fraction of problems where at least one attempt was correct."""
    if not attempt_correctness:
        return 0.0
    for i, flags in enumerate(attempt_correctness):
        if not flags:
            raise ValueError(f"problem {i} has no attempt flags")
    hits = sum(1 for flags in attempt_correctness if any(flags))
    return hits / len(attempt_correctness)
