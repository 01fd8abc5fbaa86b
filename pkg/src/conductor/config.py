"""YAML configuration: engine, pipeline parameters, role params, sandbox.

CLI flags override file values; file values override package defaults.

Example:

    engine:
      kind: remote
      endpoint: http://localhost:8000/v1/chat/completions
      model: my-model
      request_timeout: 120
      params: {temperature: 0.7, max_tokens: 4096}
    pipeline:
      best_of_n: 3
      n_plans: 2
      verify_mode: vote
    roles:
      verify: {temperature: 0.0}
    sandbox:
      wall_time: 30
      output_bytes: 65536
    prompts:
      dir: ./my_prompts

A scripted engine (for offline runs) lists its responses instead:

    engine:
      kind: scripted
      script:
        - {match: "judging", response: "Candidate 1"}
      queue: ["42", "43"]
"""

from __future__ import annotations

import os
import sys
from dataclasses import fields as dataclass_fields
from dataclasses import replace
from pathlib import Path
from typing import Any

import yaml

from .agents import AgentRoleConfig, PromptRegistry, ROLE_NAMES, default_role_configs
from .engine import EngineDescriptor, GenerationParams, make_scripted_engine
from .pipelines import PipelineConfig
from .sandbox import Limits, Sandbox


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"config root must be a mapping, got {type(data).__name__}")
    return data


def _params_from(section: dict[str, Any], base: GenerationParams) -> GenerationParams:
    kwargs = {}
    for key in ("temperature", "max_tokens", "seed"):
        if key in section:
            kwargs[key] = section[key]
    if "stop" in section and section["stop"] is not None:
        kwargs["stop"] = tuple(section["stop"])
    return replace(base, **kwargs) if kwargs else base


def engine_from_config(
    config: dict[str, Any],
    endpoint: str | None = None,
    model: str | None = None,
) -> EngineDescriptor:
    """Build the engine; explicit endpoint/model arguments win over file values."""
    section = dict(config.get("engine") or {})
    kind = section.get("kind", "remote")
    params = _params_from(section.get("params") or {}, GenerationParams())

    if kind == "scripted":
        entries: list = []
        for item in section.get("script") or []:
            entries.append((item.get("match", ""), item["response"]))
        for response in section.get("queue") or []:
            entries.append(str(response))
        if not entries:
            raise ValueError("scripted engine config needs script or queue entries")
        return make_scripted_engine(
            entries,
            model_name=section.get("model", "scripted"),
            default_params=params,
        )

    resolved_endpoint = endpoint or section.get("endpoint")
    if not resolved_endpoint:
        raise ValueError("remote engine requires an endpoint (flag or config)")
    return EngineDescriptor(
        kind="remote",
        endpoint=resolved_endpoint,
        model_name=model or section.get("model", "default"),
        default_params=params,
        max_retries=int(section.get("max_retries", 3)),
        request_timeout=float(section.get("request_timeout", 120.0)),
        api_key_env=section.get("api_key_env", "CONDUCTOR_API_KEY"),
    )


def pipeline_config_from(
    config: dict[str, Any], overrides: dict[str, Any] | None = None
) -> PipelineConfig:
    section = dict(config.get("pipeline") or {})
    if overrides:
        section.update({k: v for k, v in overrides.items() if v is not None})
    valid = {f.name for f in dataclass_fields(PipelineConfig)}
    unknown = set(section) - valid
    if unknown:
        raise ValueError(f"unknown pipeline config keys: {sorted(unknown)}")
    return PipelineConfig(**section)


def roles_from_config(config: dict[str, Any]) -> dict[str, AgentRoleConfig]:
    roles = default_role_configs()
    for name, section in (config.get("roles") or {}).items():
        if name not in ROLE_NAMES:
            raise ValueError(f"unknown role {name!r} in config")
        base = roles[name]
        params = _params_from(section or {}, base.params)
        template_id = (section or {}).get("template", base.template_id)
        roles[name] = AgentRoleConfig(role=name, template_id=template_id, params=params)
    return roles


def sandbox_from_config(config: dict[str, Any]) -> Sandbox:
    section = dict(config.get("sandbox") or {})
    interpreters = {"python": sys.executable}
    interpreters.update(section.get("interpreters") or {})
    limits = Limits(
        wall_time=float(section.get("wall_time", 30.0)),
        output_bytes=int(section.get("output_bytes", 65536)),
    )
    scratch = section.get("scratch_root") or os.environ.get("CONDUCTOR_SCRATCH_ROOT")
    return Sandbox(
        interpreters=interpreters,
        scratch_root=scratch,
        limits=limits,
    )


def registry_from_config(config: dict[str, Any]) -> PromptRegistry:
    section = config.get("prompts") or {}
    prompt_dir = section.get("dir")
    if prompt_dir:
        return PromptRegistry.from_dir(prompt_dir)
    return PromptRegistry.builtin()
