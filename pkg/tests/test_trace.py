"""Trace sink: persistence, integrity trailer, accounting."""

from __future__ import annotations

import json

import pytest

from conductor import TokenUsage, Trace, read_trace
from conductor.errors import CorruptTraceError


def test_seq_strictly_increasing():
    trace = Trace("r1")
    for _ in range(5):
        trace.append(kind="decision", payload={})
    assert [ev.seq for ev in trace.events] == [0, 1, 2, 3, 4]


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        Trace("r1").append(kind="mystery")


def test_roundtrip(tmp_path):
    path = tmp_path / "t.jsonl"
    trace = Trace("r1", path=path)
    trace.append(
        kind="engine_call",
        role="execute",
        attempt_index=1,
        plan_index=2,
        payload={"text": "hi"},
        usage=TokenUsage(3, 4),
        wall_time=1.25,
    )
    trace.append(kind="vote", payload={"routine": "strict_majority"})
    trace.close()
    events = read_trace(path)
    assert len(events) == 2
    assert events[0].role == "execute"
    assert events[0].usage == TokenUsage(3, 4)
    assert events[0].attempt_index == 1
    assert events[1].payload["routine"] == "strict_majority"


def test_deterministic_mode_zeroes_wall_time(tmp_path):
    trace = Trace("r1", path=tmp_path / "t.jsonl", deterministic=True)
    trace.append(kind="engine_call", wall_time=9.0, usage=TokenUsage(1, 1))
    trace.close()
    assert read_trace(tmp_path / "t.jsonl")[0].wall_time == 0.0


def test_total_usage_sums_engine_calls():
    trace = Trace("r1")
    trace.append(kind="engine_call", usage=TokenUsage(10, 5))
    trace.append(kind="engine_call", usage=TokenUsage(1, 2))
    trace.append(kind="sandbox_run", payload={})
    total = trace.total_usage()
    assert (total.prompt_tokens, total.completion_tokens, total.total) == (11, 7, 18)


def test_missing_trailer(tmp_path):
    path = tmp_path / "t.jsonl"
    trace = Trace("r1", path=path)
    trace.append(kind="decision", payload={})
    trace.close()
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(CorruptTraceError, match="trailer"):
        read_trace(path)


def test_deleted_event_line(tmp_path):
    path = tmp_path / "t.jsonl"
    trace = Trace("r1", path=path)
    for _ in range(3):
        trace.append(kind="decision", payload={})
    trace.close()
    lines = path.read_text().splitlines()
    del lines[1]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptTraceError):
        read_trace(path)


def test_hash_mismatch_on_edit(tmp_path):
    path = tmp_path / "t.jsonl"
    trace = Trace("r1", path=path)
    trace.append(kind="decision", payload={"final_answer": "1"})
    trace.close()
    text = path.read_text().replace('"final_answer":"1"', '"final_answer":"2"')
    path.write_text(text)
    with pytest.raises(CorruptTraceError, match="hash"):
        read_trace(path)


def test_seq_gap_detected(tmp_path):
    path = tmp_path / "t.jsonl"
    trace = Trace("r1", path=path)
    trace.append(kind="decision", payload={})
    trace.append(kind="decision", payload={})
    trace.close()
    lines = path.read_text().splitlines()
    second = json.loads(lines[1])
    second["seq"] = 5
    lines[1] = json.dumps(second, sort_keys=True, separators=(",", ":"))
    # rewrite the trailer so only the gap (not the hash) trips
    import hashlib

    digest = hashlib.sha256()
    for line in lines[:-1]:
        digest.update((line + "\n").encode())
    trailer = json.loads(lines[-1])
    trailer["sha256"] = digest.hexdigest()
    lines[-1] = json.dumps(trailer, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptTraceError, match="seq gap"):
        read_trace(path)


def test_empty_file(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text("")
    with pytest.raises(CorruptTraceError):
        read_trace(path)


def test_concurrent_appends_get_distinct_seqs():
    import concurrent.futures

    trace = Trace("r1")
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda i: trace.append(kind="decision", payload={"i": i}), range(64)))
    assert sorted(ev.seq for ev in trace.events) == list(range(64))


def test_close_idempotent(tmp_path):
    trace = Trace("r1", path=tmp_path / "t.jsonl")
    trace.append(kind="decision", payload={})
    trace.close()
    trace.close()
    assert len(read_trace(tmp_path / "t.jsonl")) == 1
