import json

import torch

from fcnplan_trainer.cli import main

from conftest import planner_cli


def test_train_cli_end_to_end(tmp_path):
    torch.set_num_threads(2)
    raw = tmp_path / "raw.fpd"
    truth = tmp_path / "truth.fpd"
    planner_cli("gen", "--size", "8", "--count", "60", "--min-dist", "3",
                "--seed", "31", "--out", str(raw), "--quiet")
    planner_cli("oracle", "--in", str(raw), "--out", str(truth), "--quiet")

    weights = tmp_path / "tiny.fcnw"
    manifest_path = tmp_path / "manifest.json"
    code = main([
        "--data", str(truth), "--out", str(weights), "--manifest", str(manifest_path),
        "--conv-layers", "2", "--filters", "4", "--max-epochs", "2", "--trials", "2",
        "--val-fraction", "0.2", "--seed", "9", "--threads", "2",
    ])
    assert code == 0
    manifest = json.loads(manifest_path.read_text())
    assert len(manifest["trials"]) == 2
    assert manifest["optimizer"] == {"name": "adam", "lr": 1e-3, "betas": [0.9, 0.999]}
    assert manifest["early_stop_patience"] == 10
    assert manifest["weights"] == str(weights)

    # exported weights must drive the planner's inference stage
    pred = tmp_path / "pred.fpd"
    planner_cli("infer", "--weights", str(weights), "--in", str(raw),
                "--out", str(pred), "--quiet")


def test_train_cli_rejects_dataset_without_truth(tmp_path):
    raw = tmp_path / "raw.fpd"
    planner_cli("gen", "--size", "8", "--count", "5", "--min-dist", "3",
                "--seed", "32", "--out", str(raw), "--quiet")
    code = main(["--data", str(raw), "--out", str(tmp_path / "w.fcnw"),
                 "--conv-layers", "2", "--filters", "4", "--trials", "1"])
    assert code == 2
