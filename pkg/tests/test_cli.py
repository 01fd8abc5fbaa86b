"""Command-line surface."""

from __future__ import annotations

import json

import pytest
import yaml

from conductor.cli import main

from conftest import boxed


def write_dataset(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


@pytest.fixture
def scripted_setup(tmp_path):
    dataset = tmp_path / "mini.jsonl"
    write_dataset(
        dataset,
        [
            {"id": "p1", "prompt": "alpha question", "answer": "5", "category": "math"},
            {"id": "p2", "prompt": "beta question", "answer": "7", "category": "math"},
        ],
    )
    config = tmp_path / "conf.yaml"
    config.write_text(
        yaml.safe_dump(
            {
                "engine": {"kind": "scripted", "queue": [boxed("5"), boxed("7")]},
                "pipeline": {
                    "best_of_n": 1,
                    "n_plans": 1,
                    "without_planner": True,
                    "without_reflection": True,
                },
            }
        )
    )
    out = tmp_path / "out"
    return dataset, config, out


class TestRun:
    def test_scripted_run_succeeds(self, scripted_setup, capsys):
        dataset, config, out = scripted_setup
        code = main(
            [
                "run",
                "--dataset", str(dataset),
                "--pipeline", "simple",
                "--config", str(config),
                "--out", str(out),
                "--deterministic",
            ]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "accuracy: 1.0000" in printed
        assert (out / "report.json").exists()
        assert (out / "traces" / "p1.jsonl").exists()

    def test_missing_dataset_is_batch_failure(self, scripted_setup, capsys):
        _, config, out = scripted_setup
        code = main(
            [
                "run",
                "--dataset", "/nonexistent/data.jsonl",
                "--pipeline", "simple",
                "--config", str(config),
                "--out", str(out),
            ]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_remote_without_endpoint_fails(self, scripted_setup):
        dataset, _, out = scripted_setup
        code = main(
            ["run", "--dataset", str(dataset), "--pipeline", "simple", "--out", str(out)]
        )
        assert code == 1

    def test_bad_invocation_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["run", "--pipeline", "bogus"])
        assert err.value.code == 2

    def test_flag_overrides_config_parallelism(self, scripted_setup):
        dataset, config, out = scripted_setup
        code = main(
            [
                "run",
                "--dataset", str(dataset),
                "--pipeline", "simple",
                "--config", str(config),
                "--parallelism", "4",
                "--out", str(out),
            ]
        )
        assert code == 0  # scripted engines still run single-threaded


class TestRefinePipeline:
    def test_refine_run_from_cli(self, tmp_path, capsys):
        dataset = tmp_path / "code.jsonl"
        write_dataset(
            dataset,
            [
                {
                    "id": "echo",
                    "prompt": "print the input line back",
                    "category": "code",
                    "tests": [
                        {"stdin": "1", "expected_stdout": "1"},
                        {"stdin": "2", "expected_stdout": "2"},
                    ],
                }
            ],
        )
        config = tmp_path / "conf.yaml"
        config.write_text(
            yaml.safe_dump(
                {
                    "engine": {
                        "kind": "scripted",
                        "queue": [
                            "```python\nprint('x')\n```",
                            "```python\nprint(input())\n```",
                        ],
                    }
                }
            )
        )
        out = tmp_path / "out"
        code = main(
            [
                "run",
                "--dataset", str(dataset),
                "--pipeline", "refine",
                "--config", str(config),
                "--out", str(out),
                "--deterministic",
            ]
        )
        assert code == 0
        assert "accuracy: 1.0000" in capsys.readouterr().out
        assert main(["replay", str(out / "traces")]) == 0


class TestRemoteEndpointFlag:
    def test_run_against_live_stub(self, stub_server, tmp_path, capsys):
        from conftest import StubChatHandler, ok_chat_payload

        StubChatHandler.default_behavior = ("ok", ok_chat_payload(boxed("11")))
        host, port = stub_server.server_address
        dataset = tmp_path / "d.jsonl"
        write_dataset(dataset, [{"id": "p1", "prompt": "q", "answer": "11"}])
        config = tmp_path / "conf.yaml"
        config.write_text(
            yaml.safe_dump(
                {
                    "pipeline": {
                        "best_of_n": 1,
                        "n_plans": 1,
                        "without_planner": True,
                        "without_reflection": True,
                    }
                }
            )
        )
        out = tmp_path / "out"
        code = main(
            [
                "run",
                "--dataset", str(dataset),
                "--pipeline", "simple",
                "--config", str(config),
                "--engine-endpoint", f"http://{host}:{port}/v1/chat/completions",
                "--model", "stub-model",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert "accuracy: 1.0000" in capsys.readouterr().out
        assert StubChatHandler.requests_seen[0]["model"] == "stub-model"


class TestScoreReplayReport:
    @pytest.fixture
    def completed_run(self, scripted_setup):
        dataset, config, out = scripted_setup
        main(
            [
                "run",
                "--dataset", str(dataset),
                "--pipeline", "simple",
                "--config", str(config),
                "--out", str(out),
                "--deterministic",
            ]
        )
        return dataset, out

    def test_score(self, completed_run, capsys, tmp_path):
        dataset, out = completed_run
        rebuilt = tmp_path / "rebuilt.json"
        code = main(
            [
                "score",
                "--traces", str(out / "traces"),
                "--dataset", str(dataset),
                "--out", str(rebuilt),
            ]
        )
        assert code == 0
        assert rebuilt.exists()
        assert "accuracy: 1.0000" in capsys.readouterr().out

    def test_replay_ok(self, completed_run, capsys):
        _, out = completed_run
        code = main(["replay", str(out / "traces")])
        assert code == 0
        printed = capsys.readouterr().out
        assert printed.count(": ok (") == 2

    def test_replay_corrupt_fails(self, completed_run, capsys):
        _, out = completed_run
        victim = out / "traces" / "p1.jsonl"
        lines = victim.read_text().splitlines()
        victim.write_text("\n".join(lines[:-1]) + "\n")  # drop the trailer
        code = main(["replay", str(victim)])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out

    def test_report_renders_table(self, completed_run, capsys):
        _, out = completed_run
        code = main(["report", "--report", str(out / "report.json")])
        assert code == 0
        printed = capsys.readouterr().out
        assert "p1" in printed and "p2" in printed
        assert "recall@best_of_N" in printed
