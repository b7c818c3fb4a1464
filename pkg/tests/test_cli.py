import json

import pytest

from aogqa.cli import load_config, main
from aogqa.report import read_curve_csv


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "config.json"
    path.write_text(
        json.dumps(
            {
                "world": {
                    "categories": 1,
                    "poses_per_category": 1,
                    "pool_size": 8,
                    "probe_size": 2,
                    "seed": 3,
                },
                "engine": {
                    "iterations": 1,
                    "background_count": 4,
                    "mining": {"max_moves": 4},
                    "cost": {"label_part": 5.0},
                },
            }
        )
    )
    return path


def test_load_config_unpacks_nested_sections(config_path):
    world_cfg, engine_cfg = load_config(config_path)
    assert world_cfg.categories == 1
    assert world_cfg.pool_size == 8
    assert engine_cfg.iterations == 1
    assert engine_cfg.cost.label_part == 5.0
    assert engine_cfg.mining.max_moves == 4


def test_init_writes_world_archive(config_path, tmp_path, capsys):
    assert main(["init", "--config", str(config_path), "--out", str(tmp_path)]) == 0
    world_dir = tmp_path / "world"
    assert (world_dir / "manifest.json").exists()
    assert "world written" in capsys.readouterr().out


def test_eval_and_report_refuse_without_artifacts(config_path, tmp_path, capsys):
    assert main(["eval", "--config", str(config_path), "--out", str(tmp_path)]) == 2
    assert main(["report", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "run the learner first" in err


def test_run_then_eval_then_report(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_path), "--out", str(out)]) == 0
    for name in ("events.jsonl", "model.json", "ledger.json", "curve.csv"):
        assert (out / name).exists(), name
    rows = read_curve_csv(out / "curve.csv")
    assert len(rows) == 2  # one bootstrap storyline + one selected
    assert rows[0]["iteration"] == 0

    assert main(["eval", "--config", str(config_path), "--out", str(out)]) == 0
    eval_doc = json.loads((out / "eval.json").read_text())
    assert 0.0 <= eval_doc["app"] <= 1.0
    assert "APP=" in capsys.readouterr().out

    assert main(["report", "--out", str(out)]) == 0
    assert (out / "plots" / "accuracy_vs_labor.png").exists()
    assert (out / "plots" / "cost_trajectory.png").exists()


def test_seed_override_reaches_both_configs(config_path, tmp_path):
    out = tmp_path / "seeded"
    assert main(["init", "--config", str(config_path), "--seed", "41", "--out", str(out)]) == 0
    manifest = json.loads((out / "world" / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 41
