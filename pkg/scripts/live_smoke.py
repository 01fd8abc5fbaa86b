#!/usr/bin/env python3
"""Live smoke: a 3-problem math batch against a real chat-completion endpoint.

No accuracy is asserted (that is model-dependent); the batch must simply
complete with non-empty answers and a well-formed report.

    python scripts/live_smoke.py --endpoint http://host:8000/v1/chat/completions \
        --model my-model --out /tmp/smoke

The bearer token, if the endpoint needs one, comes from CONDUCTOR_API_KEY.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from conductor import (  # noqa: E402
    EngineDescriptor,
    GenerationParams,
    PipelineConfig,
    Problem,
    run_benchmark,
)
from conductor.cli import _render_report  # noqa: E402

PROBLEMS = [
    Problem(
        id="smoke-1",
        prompt="What is 17 * 23? Finish with the final answer in \\boxed{...}.",
        ground_truth="391",
        category="math",
    ),
    Problem(
        id="smoke-2",
        prompt="What is the sum of the integers from 1 to 40? Finish with the final answer in \\boxed{...}.",
        ground_truth="820",
        category="math",
    ),
    Problem(
        id="smoke-3",
        prompt="How many prime numbers are less than 30? Finish with the final answer in \\boxed{...}.",
        ground_truth="10",
        category="math",
    ),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--endpoint", default=os.environ.get("CONDUCTOR_SMOKE_ENDPOINT"))
    parser.add_argument("--model", default=os.environ.get("CONDUCTOR_SMOKE_MODEL", "default"))
    parser.add_argument("--out", default="smoke-out")
    parser.add_argument("--max-tokens", type=int, default=2048)
    args = parser.parse_args()
    if not args.endpoint:
        print(
            "no endpoint configured; pass --endpoint or set CONDUCTOR_SMOKE_ENDPOINT",
            file=sys.stderr,
        )
        return 2

    engine = EngineDescriptor(
        kind="remote",
        endpoint=args.endpoint,
        model_name=args.model,
        default_params=GenerationParams(max_tokens=args.max_tokens),
    )
    cfg = PipelineConfig(
        best_of_n=1,
        n_plans=1,
        num_attempts_baseline=3,
        num_attempts_coding=2,
        num_attempts_simple=1,
        without_planner=True,
        without_reflection=True,
    )
    report = run_benchmark(
        PROBLEMS, "adaptive", cfg, engine, out_dir=args.out, dataset_id="smoke"
    )
    print(_render_report(report))
    bad = [p for p in report.per_problem if p.error or not p.final_answer]
    if bad:
        print(f"\nsmoke FAILED for {[p.id for p in bad]}", file=sys.stderr)
        return 1
    print("\nsmoke ok: all answers non-empty")
    return 0


if __name__ == "__main__":
    sys.exit(main())
