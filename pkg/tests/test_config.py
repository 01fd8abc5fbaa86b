"""YAML configuration plumbing."""

from __future__ import annotations

import pytest
import yaml

from conductor.config import (
    engine_from_config,
    load_config,
    pipeline_config_from,
    registry_from_config,
    roles_from_config,
    sandbox_from_config,
)


def write_yaml(path, data) -> str:
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_load_missing_is_empty():
    assert load_config(None) == {}


def test_load_rejects_non_mapping(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- just\n- a\n- list\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_remote_engine_with_overrides(tmp_path):
    config = load_config(
        write_yaml(
            tmp_path / "c.yaml",
            {
                "engine": {
                    "kind": "remote",
                    "endpoint": "http://file-endpoint/v1",
                    "model": "file-model",
                    "max_retries": 5,
                    "request_timeout": 7,
                    "params": {"temperature": 0.3, "max_tokens": 128},
                }
            },
        )
    )
    engine = engine_from_config(config)
    assert engine.endpoint == "http://file-endpoint/v1"
    assert engine.max_retries == 5
    assert engine.default_params.temperature == 0.3

    overridden = engine_from_config(config, endpoint="http://flag/v1", model="flag-model")
    assert overridden.endpoint == "http://flag/v1"
    assert overridden.model_name == "flag-model"


def test_remote_engine_requires_endpoint():
    with pytest.raises(ValueError):
        engine_from_config({"engine": {"kind": "remote"}})


def test_scripted_engine_from_file(tmp_path):
    config = load_config(
        write_yaml(
            tmp_path / "c.yaml",
            {
                "engine": {
                    "kind": "scripted",
                    "script": [{"match": "plan", "response": "1. think"}],
                    "queue": ["fallback answer"],
                }
            },
        )
    )
    engine = engine_from_config(config)
    assert engine.kind == "scripted"
    assert engine.script.remaining() == 2


def test_pipeline_section_and_overrides(tmp_path):
    config = load_config(
        write_yaml(tmp_path / "c.yaml", {"pipeline": {"best_of_n": 2, "verify_mode": "judge"}})
    )
    cfg = pipeline_config_from(config, overrides={"parallelism": 4, "best_of_n": None})
    assert cfg.best_of_n == 2  # None override ignored
    assert cfg.verify_mode == "judge"
    assert cfg.parallelism == 4


def test_unknown_pipeline_key_rejected(tmp_path):
    config = load_config(write_yaml(tmp_path / "c.yaml", {"pipeline": {"bestofn": 2}}))
    with pytest.raises(ValueError):
        pipeline_config_from(config)


def test_roles_overrides(tmp_path):
    config = load_config(
        write_yaml(tmp_path / "c.yaml", {"roles": {"verify": {"temperature": 0.5}}})
    )
    roles = roles_from_config(config)
    assert roles["verify"].params.temperature == 0.5
    assert roles["execute"].params.temperature == 0.7


def test_unknown_role_rejected(tmp_path):
    config = load_config(write_yaml(tmp_path / "c.yaml", {"roles": {"oracle": {}}}))
    with pytest.raises(ValueError):
        roles_from_config(config)


def test_sandbox_limits(tmp_path):
    config = load_config(
        write_yaml(tmp_path / "c.yaml", {"sandbox": {"wall_time": 3, "output_bytes": 512}})
    )
    sandbox = sandbox_from_config(config)
    assert sandbox.limits.wall_time == 3.0
    assert sandbox.limits.output_bytes == 512


def test_scratch_root_env_fallback(monkeypatch, tmp_path):
    monkeypatch.setenv("CONDUCTOR_SCRATCH_ROOT", str(tmp_path / "scratch"))
    sandbox = sandbox_from_config({})
    assert sandbox.scratch_root == str(tmp_path / "scratch")


def test_prompt_dir(tmp_path):
    (tmp_path / "verify.txt").write_text("pick one: {candidates}\n")
    config = {"prompts": {"dir": str(tmp_path)}}
    registry = registry_from_config(config)
    assert registry.render("verify", candidates="A or B").startswith("pick one: A or B")
