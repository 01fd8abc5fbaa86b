"""Benchmark-harness command line.

Subcommands:
  run     run a dataset through a pipeline, writing traces and a report
  score   rebuild a report from existing traces plus a dataset
  replay  audit trace files by recomputing every vote and decision
  report  render a saved report as a table

Exit codes: 0 success, 1 batch-level failure, 2 bad invocation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    engine_from_config,
    load_config,
    pipeline_config_from,
    registry_from_config,
    roles_from_config,
    sandbox_from_config,
)
from .datasets import load_dataset
from .errors import ConductorError
from .harness import Report, run_benchmark, score_traces
from .replay import replay_trace


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conductor",
        description="Drive a chat-completion engine through reasoning pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark dataset through a pipeline")
    run.add_argument("--dataset", required=True, help="JSON-lines dataset file")
    run.add_argument(
        "--pipeline",
        required=True,
        choices=("simple", "adaptive", "refine"),
    )
    run.add_argument("--config", help="YAML config file")
    run.add_argument("--engine-endpoint", help="chat-completion endpoint URL")
    run.add_argument("--model", help="model name sent to the engine")
    run.add_argument("--parallelism", type=int, help="concurrent problem runs")
    run.add_argument("--out", required=True, help="output directory for traces/report")
    run.add_argument(
        "--deterministic",
        action="store_true",
        help="zero wall times and fix seeds for byte-identical traces",
    )

    score = sub.add_parser("score", help="rescore existing traces against a dataset")
    score.add_argument("--traces", required=True, help="directory of trace files")
    score.add_argument("--dataset", required=True)
    score.add_argument("--out", help="write the rebuilt report JSON here")

    replay = sub.add_parser("replay", help="audit traces by recomputing decisions")
    replay.add_argument("paths", nargs="+", help="trace files or directories")

    report = sub.add_parser("report", help="render a report file as a table")
    report.add_argument("--report", required=True, dest="report_path")
    return parser


def _render_report(report: Report) -> str:
    lines = [
        f"dataset:  {report.dataset_id}",
        f"pipeline: {report.pipeline}",
        f"accuracy: {report.accuracy:.4f}",
        f"recall@best_of_N: {report.recall_at_best_of_n:.4f}",
        "exit points: "
        + ", ".join(f"{k}={v}" for k, v in sorted(report.exit_point_histogram.items())),
        f"tokens: prompt={report.token_totals.prompt_tokens} "
        f"completion={report.token_totals.completion_tokens} "
        f"total={report.token_totals.total}",
        "",
        f"{'id':<24} {'correct':<8} {'exit':<16} final",
    ]
    for p in report.per_problem:
        shown = "-" if p.correct is None else str(p.correct)
        final = p.final_answer.replace("\n", "\\n")
        if len(final) > 40:
            final = final[:37] + "..."
        lines.append(f"{p.id:<24} {shown:<8} {p.exit_point:<16} {final}")
    return "\n".join(lines)


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    dataset = load_dataset(args.dataset)
    engine = engine_from_config(config, endpoint=args.engine_endpoint, model=args.model)
    cfg = pipeline_config_from(config, overrides={"parallelism": args.parallelism})
    report = run_benchmark(
        dataset,
        args.pipeline,
        cfg,
        engine,
        out_dir=args.out,
        dataset_id=Path(args.dataset).stem,
        deterministic=args.deterministic,
        registry=registry_from_config(config),
        roles=roles_from_config(config),
        sandbox=sandbox_from_config(config),
    )
    print(_render_report(report))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    report = score_traces(args.traces, dataset, dataset_id=Path(args.dataset).stem)
    if args.out:
        report.save(args.out)
    print(_render_report(report))
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    paths: list[Path] = []
    for raw in args.paths:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.jsonl")))
        else:
            paths.append(p)
    if not paths:
        print("no trace files found", file=sys.stderr)
        return 1
    failures = 0
    for path in paths:
        try:
            result = replay_trace(path)
        except ConductorError as exc:
            failures += 1
            print(f"{path}: FAIL ({exc})")
            continue
        print(f"{path}: ok (final={result.final_answer!r}, exit={result.exit_point})")
    return 1 if failures else 0


def _cmd_report(args: argparse.Namespace) -> int:
    data = json.loads(Path(args.report_path).read_text(encoding="utf-8"))
    lines = [
        f"dataset:  {data['dataset_id']}",
        f"pipeline: {data['pipeline']}",
        f"accuracy: {data['accuracy']:.4f}",
        f"recall@best_of_N: {data['recall_at_best_of_n']:.4f}",
        "exit points: "
        + ", ".join(f"{k}={v}" for k, v in sorted(data["exit_point_histogram"].items())),
        f"tokens: total={data['token_totals']['total']}",
        "",
        f"{'id':<24} {'correct':<8} {'exit':<16} final",
    ]
    for p in data["per_problem"]:
        shown = "-" if p["correct"] is None else str(p["correct"])
        final = str(p["final_answer"]).replace("\n", "\\n")
        if len(final) > 40:
            final = final[:37] + "..."
        lines.append(f"{p['id']:<24} {shown:<8} {p['exit_point']:<16} {final}")
    print("\n".join(lines))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "score": _cmd_score,
        "replay": _cmd_replay,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConductorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
