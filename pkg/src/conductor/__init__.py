"""Conductor: test-time orchestration of chat-completion reasoning engines.

A library plus benchmark-harness CLI that drives any chat-completion
model through planning, parallel execution, reflection, multi-method
verification, adaptive escalation between direct reasoning and code
execution, and test-driven program refinement, with full run tracing.
"""

from .agents import (
    AgentRoleConfig,
    Execution,
    Plan,
    PromptRegistry,
    Runtime,
    Synthesis,
    code_solve,
    default_role_configs,
    execute,
    plan,
    reflect,
    verify,
)
from .datasets import Problem, load_dataset
from .engine import (
    Completion,
    EngineDescriptor,
    GenerationParams,
    Message,
    TokenUsage,
    complete,
    make_scripted_engine,
)
from .extraction import (
    CandidateAnswer,
    CodeBlock,
    extract_code_block,
    extract_final_answer,
    normalize,
)
from .harness import Report, run_benchmark, score_traces
from .pipelines import (
    PipelineConfig,
    RunResult,
    recall_at_best_of_n,
    run_adaptive,
    run_refinement,
    run_simple,
)
from .refinement import refine_with_feedback
from .replay import replay_trace
from .sandbox import ExecutionResult, Limits, Sandbox, TestCase, TestReport, format_feedback
from .trace import Trace, TraceEvent, read_trace
from .voting import VoteOutcome, plurality_vote, resolve_final, strict_majority

__version__ = "0.1.0"

__all__ = [
    "AgentRoleConfig",
    "CandidateAnswer",
    "CodeBlock",
    "Completion",
    "EngineDescriptor",
    "Execution",
    "ExecutionResult",
    "GenerationParams",
    "Limits",
    "Message",
    "Plan",
    "PipelineConfig",
    "Problem",
    "PromptRegistry",
    "Report",
    "RunResult",
    "Runtime",
    "Sandbox",
    "Synthesis",
    "TestCase",
    "TestReport",
    "TokenUsage",
    "Trace",
    "TraceEvent",
    "VoteOutcome",
    "code_solve",
    "complete",
    "default_role_configs",
    "execute",
    "extract_code_block",
    "extract_final_answer",
    "format_feedback",
    "load_dataset",
    "make_scripted_engine",
    "normalize",
    "plan",
    "plurality_vote",
    "read_trace",
    "recall_at_best_of_n",
    "refine_with_feedback",
    "reflect",
    "replay_trace",
    "resolve_final",
    "run_adaptive",
    "run_benchmark",
    "run_refinement",
    "run_simple",
    "score_traces",
    "strict_majority",
    "verify",
]
