"""Trace auditing: recompute every vote and decision from the record.

Vote events carry their inputs, so each voting routine can be re-run
offline and compared bit-for-bit against the recorded outcome. Decision
events carry per-pass candidate pools, so the pipeline's early-exit
cascade and final aggregation can be re-derived as well. Any divergence
names the offending sequence number.
"""

from __future__ import annotations

from pathlib import Path

from .errors import CorruptTraceError, ReplayMismatchError
from .extraction import CandidateAnswer
from .pipelines import RunResult
from .refinement import best_version_index
from .trace import TraceEvent, read_trace
from .voting import VoteOutcome, plurality_vote, resolve_final, strict_majority


def _check(condition: bool, message: str, seq: int) -> None:
    if not condition:
        raise ReplayMismatchError(f"seq {seq}: {message}", seq=seq)


def _replay_vote(ev: TraceEvent) -> None:
    payload = ev.payload
    routine = payload.get("routine")
    if routine == "resolve_final":
        recomputed = resolve_final(payload["modes"], payload["pool"])
        _check(
            recomputed == payload["chosen"],
            f"resolve_final gives {recomputed!r}, recorded {payload['chosen']!r}",
            ev.seq,
        )
        return
    inputs = payload["inputs"]
    if routine == "judge":
        _check(
            payload["chosen"] in inputs,
            "judge chose an answer outside the candidate pool",
            ev.seq,
        )
        recomputed = plurality_vote(inputs)
    elif routine == "strict_majority":
        recomputed = strict_majority(inputs)
    elif routine == "plurality_vote":
        recomputed = plurality_vote(inputs) if inputs else None
        if "chosen" in payload and recomputed is not None:
            expected = resolve_final(recomputed.modes, inputs)
            _check(
                expected == payload["chosen"],
                f"vote resolves to {expected!r}, recorded {payload['chosen']!r}",
                ev.seq,
            )
    else:
        raise CorruptTraceError(f"seq {ev.seq}: unknown vote routine {routine!r}")
    if recomputed is not None:
        _check(
            recomputed.to_payload() == payload["outcome"],
            "recomputed vote outcome differs from record",
            ev.seq,
        )


def _replay_simple_decision(ev: TraceEvent) -> None:
    payload = ev.payload
    candidates = [c["canonical"] for c in payload["candidates"]]
    final = payload["final_answer"]
    routine = payload.get("verify_routine", "none")
    if routine == "none":
        _check(final == "" and not candidates, "empty run must have empty answer", ev.seq)
        return
    _check(bool(candidates), "verified run without candidates", ev.seq)
    if routine == "judge":
        _check(final in candidates, "judge answer not in candidate pool", ev.seq)
        return
    expected = resolve_final(plurality_vote(candidates).modes, candidates)
    _check(
        expected == final,
        f"verification resolves to {expected!r}, recorded {final!r}",
        ev.seq,
    )


def _replay_adaptive_decision(ev: TraceEvent) -> None:
    payload = ev.payload
    pools = payload["pools"]
    baseline = pools.get("baseline", [])
    coding = pools.get("coding", [])
    simple = pools.get("simple", [])
    final = payload["final_answer"]
    exit_point = payload["exit_point"]

    recorded_pool = [c["canonical"] for c in payload["candidates"]]
    _check(
        recorded_pool == baseline + coding + simple,
        "candidate pool is not baseline ++ coding ++ simple",
        ev.seq,
    )

    if baseline:
        pv = plurality_vote(baseline)
        if len(pv.modes) == 1 and strict_majority(baseline).has_majority:
            _check(exit_point == "baseline_early", "missed baseline early exit", ev.seq)
            _check(final == next(iter(pv.modes)), "wrong baseline-exit answer", ev.seq)
            return
    _check(exit_point != "baseline_early", "spurious baseline early exit", ev.seq)

    sm = strict_majority(coding)
    if sm.has_majority:
        _check(exit_point == "coding_early", "missed coding early exit", ev.seq)
        _check(final == sm.winner, "wrong coding-exit answer", ev.seq)
        return
    _check(exit_point != "coding_early", "spurious coding early exit", ev.seq)

    _check(exit_point == "global", f"unknown exit point {exit_point!r}", ev.seq)
    pool = baseline + coding + simple
    if not pool:
        _check(final == "", "empty pool must yield empty answer", ev.seq)
        return
    expected = resolve_final(plurality_vote(pool).modes, pool)
    _check(
        expected == final,
        f"global aggregation resolves to {expected!r}, recorded {final!r}",
        ev.seq,
    )


def _replay_refine_decision(ev: TraceEvent) -> None:
    payload = ev.payload
    expected = best_version_index(payload["scores"])
    _check(
        expected == payload["chosen_index"],
        f"best version is {expected}, recorded {payload['chosen_index']}",
        ev.seq,
    )
    chosen = payload["chosen_index"]
    candidates = [c["canonical"] for c in payload["candidates"]]
    if chosen < 0:
        _check(payload["final_answer"] == "", "no version but non-empty answer", ev.seq)
    else:
        _check(
            payload["final_answer"] == candidates[chosen],
            "final answer is not the chosen version",
            ev.seq,
        )


def _replay_decision(ev: TraceEvent) -> None:
    pipeline = ev.payload.get("pipeline")
    if pipeline == "simple":
        _replay_simple_decision(ev)
    elif pipeline == "adaptive":
        _replay_adaptive_decision(ev)
    elif pipeline == "refine":
        _replay_refine_decision(ev)
    else:
        raise CorruptTraceError(f"seq {ev.seq}: unknown pipeline {pipeline!r}")


def replay_trace(path: str | Path) -> RunResult:
    """Re-derive every recorded vote and decision and compare.

    Returns the reconstructed RunResult of the run's final decision.
    Raises CorruptTraceError for structural damage and ReplayMismatchError
    (with the diverging seq) for semantic divergence.
    """
    events = read_trace(path)
    for ev in events:
        if ev.kind == "vote":
            _replay_vote(ev)
        elif ev.kind == "decision":
            _replay_decision(ev)

    finals = [ev for ev in events if ev.kind == "decision" and ev.payload.get("final")]
    if not finals:
        raise CorruptTraceError(f"{path}: no final decision event (incomplete run)")
    last = finals[-1]
    payload = last.payload
    candidates = [
        CandidateAnswer(
            raw=c["canonical"],
            canonical=c["canonical"],
            source=c.get("source", "baseline"),
            attempt_index=c.get("attempt_index", 0),
        )
        for c in payload["candidates"]
    ]
    per_pass = {
        name: VoteOutcome.from_payload(out)
        for name, out in payload.get("per_pass", {}).items()
    }
    return RunResult(
        final_answer=payload["final_answer"],
        all_candidates=candidates,
        per_pass_outcomes=per_pass,
        exit_point=payload["exit_point"],
        trace_id=last.run_id,
        chosen_version=payload.get("chosen_index", -1),
        refinement_rounds=payload.get("rounds", 0),
    )
