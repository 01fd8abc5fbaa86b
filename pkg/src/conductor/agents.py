"""The five engine-backed roles: planner, executor, reflector, verifier, coder.

Each role is a prompt template plus a response parser over the engine
gateway. Templates live on disk (one file per role) with the named
placeholders {question}, {plan}, {executions}, {feedback}, {candidates};
paragraphs whose placeholder has no value are dropped at render time, so
a single template serves both the with-plan and planless variants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .engine import (
    Completion,
    EngineDescriptor,
    GenerationParams,
    Message,
    complete,
)
from .errors import NoCodeError
from .extraction import (
    CandidateAnswer,
    extract_code_block,
    extract_final_answer,
)
from .sandbox import Limits, Sandbox, format_feedback
from .trace import Trace
from .voting import VoteOutcome, plurality_vote, resolve_final

ROLE_NAMES = ("plan", "execute", "reflect", "verify", "code")

PLACEHOLDERS = ("question", "plan", "executions", "feedback", "candidates")

_STEP_RE = re.compile(r"^\s*(?:\d+[.)]\s+|[-*]\s+)(.*\S)")
_JUDGE_CHOICE_RE = re.compile(r"candidate\s*#?\s*(\d+)", re.IGNORECASE)

DEFAULT_REFLECTION_EXCERPT_CHARS = 4000


@dataclass(frozen=True)
class Plan:
    steps: tuple[str, ...]
    raw: str


@dataclass(frozen=True)
class Execution:
    answer: CandidateAnswer | None  # None: extraction failed, excluded from votes
    transcript: str
    refinement_rounds: int = 0


@dataclass(frozen=True)
class Synthesis:
    answer: CandidateAnswer | None
    rationale: str
    inputs_considered: int


@dataclass(frozen=True)
class AgentRoleConfig:
    role: str
    template_id: str
    params: GenerationParams

    def __post_init__(self) -> None:
        if self.role not in ROLE_NAMES:
            raise ValueError(f"unknown agent role: {self.role!r}")


def default_role_configs(
    max_tokens: int = 4096,
    overrides: dict[str, GenerationParams] | None = None,
) -> dict[str, AgentRoleConfig]:
    """Sampling defaults: diverse generation (0.7) everywhere except the
    verifier, which judges at temperature 0."""
    configs = {}
    for role in ROLE_NAMES:
        temperature = 0.0 if role == "verify" else 0.7
        params = GenerationParams(temperature=temperature, max_tokens=max_tokens)
        if overrides and role in overrides:
            params = overrides[role]
        configs[role] = AgentRoleConfig(role=role, template_id=role, params=params)
    return configs


class PromptRegistry:
    """Versioned store of role templates, keyed by template_id."""

    def __init__(self, templates: dict[str, str]):
        self.templates = dict(templates)

    @classmethod
    def builtin(cls) -> "PromptRegistry":
        templates = {}
        pkg = resources.files("conductor") / "prompts"
        for entry in pkg.iterdir():
            if entry.name.endswith(".txt"):
                templates[entry.name[:-4]] = entry.read_text(encoding="utf-8")
        return cls(templates)

    @classmethod
    def from_dir(cls, path: str | Path) -> "PromptRegistry":
        """Builtin templates overlaid with any *.txt files under ``path``."""
        registry = cls.builtin()
        for file in sorted(Path(path).glob("*.txt")):
            registry.templates[file.stem] = file.read_text(encoding="utf-8")
        return registry

    def render(self, template_id: str, **fields: str | None) -> str:
        if template_id not in self.templates:
            raise KeyError(f"no prompt template {template_id!r}")
        return render_template(self.templates[template_id], **fields)


def render_template(template: str, **fields: str | None) -> str:
    """Substitute {name} placeholders literally.

    Placeholders are replaced by plain string substitution (never
    str.format) so braces in math text cannot break rendering. Any
    paragraph containing a placeholder whose value is None is dropped.
    """
    paragraphs = template.split("\n\n")
    rendered: list[str] = []
    for para in paragraphs:
        skip = False
        for name in PLACEHOLDERS:
            token = "{" + name + "}"
            if token not in para:
                continue
            value = fields.get(name)
            if value is None:
                skip = True
                break
            para = para.replace(token, value)
        if not skip:
            rendered.append(para)
    return "\n\n".join(rendered).strip() + "\n"


@dataclass
class Runtime:
    """Everything one pipeline run needs to invoke agents: the engine, the
    prompt registry, per-role sampling params, the trace sink, and a
    sandbox when code execution is in play."""

    engine: EngineDescriptor
    trace: Trace
    registry: PromptRegistry = field(default_factory=PromptRegistry.builtin)
    roles: dict[str, AgentRoleConfig] = field(default_factory=default_role_configs)
    sandbox: Sandbox | None = field(default_factory=Sandbox)
    reflection_excerpt_chars: int = DEFAULT_REFLECTION_EXCERPT_CHARS

    def ask(
        self,
        role: str,
        prompt: str,
        attempt_index: int | None = None,
        plan_index: int | None = None,
    ) -> Completion:
        cfg = self.roles[role]
        return complete(
            self.engine,
            [Message(role="user", content=prompt)],
            params=cfg.params,
            trace=self.trace,
            role=role,
            attempt_index=attempt_index,
            plan_index=plan_index,
        )


def plan(
    rt: Runtime,
    question: str,
    attempt_index: int | None = None,
    plan_index: int | None = None,
) -> Plan:
    """One planning call. Unparseable responses degrade to a single-step
    plan wrapping the raw text; planning never blocks the pipeline."""
    prompt = rt.registry.render(rt.roles["plan"].template_id, question=question)
    completion = rt.ask("plan", prompt, attempt_index, plan_index)
    steps = tuple(
        m.group(1).strip()
        for m in (_STEP_RE.match(line) for line in completion.text.splitlines())
        if m
    )
    if not steps:
        steps = (completion.text.strip(),)
    return Plan(steps=steps, raw=completion.text)


def execute(
    rt: Runtime,
    question: str,
    plan_: Plan | None = None,
    source: str = "baseline",
    attempt_index: int = 0,
    plan_index: int | None = None,
    feedback: str | None = None,
    tests: Sequence = (),
    max_refinement_iters: int = 0,
) -> Execution:
    """One executor call; the plan paragraph is omitted when no plan is
    given. Extraction failure yields the empty-answer sentinel, which is
    excluded from every vote rather than counted as a distinct answer.

    When public tests are supplied (and a refinement budget), the call
    becomes a test-driven refinement loop and the chosen program is the
    answer, with canonical = the program text itself.
    """
    if tests and max_refinement_iters > 0:
        from . import refinement  # deferred: refinement builds on this module

        outcome = refinement.refine_with_feedback(
            rt,
            question,
            tests,
            max_iters=max_refinement_iters,
            role="execute",
            attempt_index=attempt_index,
        )
        chosen = outcome.chosen
        if chosen is None:
            return Execution(answer=None, transcript="", refinement_rounds=outcome.rounds)
        answer = CandidateAnswer(
            raw=chosen.code.body,
            canonical=chosen.code.body,
            source=source,
            attempt_index=attempt_index,
        )
        return Execution(
            answer=answer,
            transcript=chosen.transcript,
            refinement_rounds=outcome.rounds,
        )

    plan_text = "\n".join(plan_.steps) if plan_ is not None else None
    prompt = rt.registry.render(
        rt.roles["execute"].template_id,
        question=question,
        plan=plan_text,
        feedback=feedback,
    )
    completion = rt.ask("execute", prompt, attempt_index, plan_index)
    answer = _try_extract(completion.text, source, attempt_index)
    return Execution(answer=answer, transcript=completion.text)


def reflect(
    rt: Runtime,
    question: str,
    executions: Sequence[Execution],
    attempt_index: int = 0,
) -> Synthesis:
    """Synthesize one answer from several executions.

    Each execution contributes its answer plus a bounded transcript
    excerpt, keeping the reflection prompt inside the engine's context
    window even when the underlying chains are long.
    """
    if not executions:
        raise ValueError("reflect requires at least one execution")
    budget = rt.reflection_excerpt_chars
    parts = []
    for i, ex in enumerate(executions, start=1):
        answer = ex.answer.canonical if ex.answer is not None else "(no answer found)"
        excerpt = ex.transcript[:budget]
        parts.append(f"--- Attempt {i} (final answer: {answer}) ---\n{excerpt}")
    prompt = rt.registry.render(
        rt.roles["reflect"].template_id,
        question=question,
        executions="\n\n".join(parts),
    )
    completion = rt.ask("reflect", prompt, attempt_index)
    answer = _try_extract(completion.text, "reflection", attempt_index)
    return Synthesis(
        answer=answer,
        rationale=completion.text,
        inputs_considered=len(executions),
    )


@dataclass(frozen=True)
class VerifyResult:
    answer: CandidateAnswer
    outcome: VoteOutcome
    routine: str  # "plurality_vote" | "judge"


def verify(
    rt: Runtime,
    question: str,
    candidates: Sequence[CandidateAnswer],
    mode: str = "vote",
    pass_label: str = "verify",
) -> VerifyResult:
    """Choose one answer from the candidate pool.

    mode=vote is a pure function of the candidate canonicals (no engine
    call); mode=judge makes exactly one engine call and falls back to the
    vote when the judgement cannot be parsed or names no candidate.
    """
    if not candidates:
        raise ValueError("verify requires at least one candidate")
    if mode not in ("vote", "judge"):
        raise ValueError(f"unknown verify mode: {mode!r}")

    outcome = plurality_vote(candidates)
    chosen: str | None = None
    routine = "plurality_vote"
    if mode == "judge":
        listing = "\n".join(
            f"Candidate {i}: {c.canonical}" for i, c in enumerate(candidates, start=1)
        )
        prompt = rt.registry.render(
            rt.roles["verify"].template_id, question=question, candidates=listing
        )
        completion = rt.ask("verify", prompt)
        chosen = _parse_judgement(completion.text, candidates)
        if chosen is not None:
            routine = "judge"
    if chosen is None:
        chosen = resolve_final(outcome.modes, candidates)

    rt.trace.append(
        kind="vote",
        role="verify",
        payload={
            "routine": routine,
            "pass": pass_label,
            "inputs": [c.canonical for c in candidates],
            "outcome": outcome.to_payload(),
            "chosen": chosen,
        },
    )
    for candidate in candidates:
        if candidate.canonical == chosen:
            return VerifyResult(answer=candidate, outcome=outcome, routine=routine)
    raise AssertionError("verify chose an answer outside the candidate pool")


def _parse_judgement(
    text: str, candidates: Sequence[CandidateAnswer]
) -> str | None:
    """Map a judge response onto one of the candidates, or None."""
    try:
        extracted = extract_final_answer(text)
    except Exception:
        extracted = None
    if extracted is not None:
        for c in candidates:
            if c.canonical == extracted.canonical:
                return c.canonical
    matches = _JUDGE_CHOICE_RE.findall(text)
    if matches:
        index = int(matches[-1])
        if 1 <= index <= len(candidates):
            return candidates[index - 1].canonical
    return None


def code_solve(
    rt: Runtime,
    question: str,
    attempt_index: int = 0,
    max_repairs: int = 2,
    limits: Limits | None = None,
) -> Execution:
    """Solve by generating and running a program.

    The program's stdout (normalized) becomes the answer. Sandbox errors
    and missing code blocks are fed back to the engine for up to
    ``max_repairs`` repair rounds; only after the final round does the
    attempt count as failed.
    """
    if rt.sandbox is None:
        raise ValueError("code_solve requires a sandbox")
    feedback: str | None = None
    transcript = ""
    rounds = 0
    for round_no in range(max_repairs + 1):
        prompt = rt.registry.render(
            rt.roles["code"].template_id, question=question, feedback=feedback
        )
        completion = rt.ask("code", prompt, attempt_index)
        transcript = completion.text
        rounds = round_no
        try:
            block = extract_code_block(completion.text)
        except NoCodeError:
            feedback = (
                "Your reply contained no fenced code block. Reply with one "
                "fenced code block containing the complete program."
            )
            continue
        result = rt.sandbox.run(block, limits=limits)
        rt.trace.append(
            kind="sandbox_run",
            role="code",
            attempt_index=attempt_index,
            payload={
                "verdict": result.verdict,
                "exit_code": result.exit_code,
                "stdout": result.stdout,
                "stderr_tail": result.stderr[-500:],
            },
            wall_time=result.duration,
        )
        if result.verdict == "ok" and result.stdout.strip():
            answer = extract_final_answer(
                result.stdout, source="coding", attempt_index=attempt_index
            )
            return Execution(answer=answer, transcript=transcript, refinement_rounds=rounds)
        feedback = format_feedback(block, result)
    return Execution(answer=None, transcript=transcript, refinement_rounds=rounds)


def _try_extract(text: str, source: str, attempt_index: int) -> CandidateAnswer | None:
    try:
        return extract_final_answer(text, source=source, attempt_index=attempt_index)
    except Exception:
        return None
