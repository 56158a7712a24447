"""Command-line surface tests: pipeline smoke, determinism, exit codes."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from adose.cli import main

SPEC = {
    "samples_per_domain": [40, 40, 40, 80],
    "text_dim": 6,
    "visual_dim": 6,
}

RUN = {
    "seed": 5,
    "model": {"embed_dim": 12, "hidden_dim": 6},
    "training": {"initial_epochs": 3, "round_epochs": 1},
    "lus": {"levels": 3, "samplings": 2},
}


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj))
    return path


def run_config(tmp_path, manifest, out_name="run"):
    cfg = dict(RUN)
    cfg["dataset"] = {"manifest": str(manifest)}
    cfg["out_dir"] = str(tmp_path / out_name)
    return write_json(tmp_path / f"{out_name}.json", cfg)


class TestPipeline:
    def test_synth_then_run_then_inspect(self, tmp_path, capsys):
        spec_path = write_json(tmp_path / "spec.json", SPEC)
        assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "data"), "--seed", "3"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["target_size"] == 80

        cfg_path = run_config(tmp_path, tmp_path / "data" / "manifest.json")
        assert main(["run", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        assert "round" in out and "accuracy" in out
        report = json.loads(out[out.index("{"):])
        assert report["final"]["budget_spent"] == report["budget"]["total"]

        assert main(["inspect-selection", "--run", str(tmp_path / "run")]) == 0
        shown = capsys.readouterr().out
        assert "ldm.csv" in shown and "diversity.csv" in shown

    def test_inspect_matches_round_dumps(self, tmp_path, capsys):
        spec_path = write_json(tmp_path / "spec.json", SPEC)
        main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "data"), "--seed", "3"])
        capsys.readouterr()
        cfg_path = run_config(tmp_path, tmp_path / "data" / "manifest.json")
        main(["run", "--config", str(cfg_path)])
        capsys.readouterr()
        main(["inspect-selection", "--run", str(tmp_path / "run")])
        shown = capsys.readouterr().out
        ldm_csv = (tmp_path / "run" / "rounds" / "round_1" / "ldm.csv").read_text().splitlines()[1:]
        smallest_id, smallest = sorted(
            (line.split(",") for line in ldm_csv), key=lambda kv: (float(kv[1]), kv[0])
        )[0]
        assert f"{smallest_id}  {float(smallest):.6f}" in shown

    def test_train_and_evaluate(self, tmp_path, capsys):
        spec_path = write_json(tmp_path / "spec.json", SPEC)
        main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "data"), "--seed", "3"])
        capsys.readouterr()
        cfg_path = run_config(tmp_path, tmp_path / "data" / "manifest.json", out_name="trained")
        assert main(["train", "--config", str(cfg_path)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["phase"] == "source-training"
        assert main([
            "evaluate", "--config", str(cfg_path), "--model", str(tmp_path / "trained" / "model"),
        ]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert 0.0 <= metrics["accuracy"] <= 1.0
        assert metrics["n_test"] == 24  # 30% of 80


class TestDeterminism:
    def test_repeated_runs_identical_modulo_environment(self, tmp_path, capsys):
        spec_path = write_json(tmp_path / "spec.json", SPEC)
        main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "data"), "--seed", "3"])
        capsys.readouterr()
        reports = []
        for name in ("r1", "r2"):
            cfg_path = run_config(tmp_path, tmp_path / "data" / "manifest.json", out_name=name)
            assert main(["run", "--config", str(cfg_path), "--seed", "7"]) == 0
            capsys.readouterr()
            obj = json.loads((tmp_path / name / "report.json").read_text())
            del obj["environment"]
            reports.append(json.dumps(obj, sort_keys=True))
        assert reports[0] == reports[1]


class TestErrors:
    def test_unknown_flag_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--bogus"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_config_exits_1(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 1
        assert "error" in capsys.readouterr().err

    def test_invalid_config_exits_1(self, tmp_path, capsys):
        cfg_path = write_json(tmp_path / "bad.json", {"dataset": {"synth": {}}, "oops": 1})
        assert main(["run", "--config", str(cfg_path)]) == 1
        assert "unknown keys" in capsys.readouterr().err

    def test_strategy_override(self, tmp_path, capsys):
        spec_path = write_json(tmp_path / "spec.json", SPEC)
        main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "data"), "--seed", "3"])
        capsys.readouterr()
        cfg_path = run_config(tmp_path, tmp_path / "data" / "manifest.json")
        assert main(["run", "--config", str(cfg_path), "--strategy", "random"]) == 0
        out = capsys.readouterr().out
        report = json.loads(out[out.index("{"):])
        assert report["config"]["strategy"] == "random"
