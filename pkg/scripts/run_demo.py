#!/usr/bin/env python3
"""Offline demo: a scripted engine drives the adaptive pipeline end to end.

Three problems exercise the three exit points (direct consensus, program
majority, global plurality). Traces and the report land in --out, every
trace is replayed for audit, and the report is printed.

    python scripts/run_demo.py --out /tmp/conductor-demo
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from conductor import (  # noqa: E402
    PipelineConfig,
    Problem,
    make_scripted_engine,
    replay_trace,
    run_benchmark,
)
from conductor.cli import _render_report  # noqa: E402


def boxed(value: str) -> str:
    return f"Working it through.\n\\boxed{{{value}}}"


def fenced(code: str) -> str:
    return f"```python\n{code}\n```"


def build_demo():
    dataset = [
        Problem(id="consensus", prompt="an easy warm-up", ground_truth="5"),
        Problem(id="needs-code", prompt="arithmetic beyond mental reach", ground_truth="735"),
        Problem(id="contested", prompt="a genuinely split question", ground_truth="2"),
    ]
    script = []
    # consensus: three matching direct answers -> baseline early exit
    script += [boxed("5")] * 3
    # needs-code: split direct answers, then a program majority
    script += [boxed("147"), boxed("735"), boxed("371")]
    script += [fenced("print(735)"), fenced("print(735)"), fenced("print(371)")]
    # contested: no majority anywhere; global plurality decides
    script += [boxed("1"), boxed("2"), boxed("3")]
    script += [fenced("print(2)"), fenced("print(3)"), fenced("print(1)")]
    script += [boxed("2")]
    return dataset, make_scripted_engine(script)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo-out", help="output directory")
    args = parser.parse_args()

    dataset, engine = build_demo()
    cfg = PipelineConfig(
        best_of_n=1,
        n_plans=1,
        without_planner=True,
        without_reflection=True,
    )
    report = run_benchmark(
        dataset,
        "adaptive",
        cfg,
        engine,
        out_dir=args.out,
        dataset_id="demo",
        deterministic=True,
    )
    print(_render_report(report))
    print()
    for trace_path in sorted(Path(args.out, "traces").glob("*.jsonl")):
        result = replay_trace(trace_path)
        print(f"replayed {trace_path.name}: final={result.final_answer!r} "
              f"exit={result.exit_point}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
