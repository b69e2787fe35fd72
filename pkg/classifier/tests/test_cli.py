"""End-to-end CLI: train then evaluate on the synthetic separable dataset."""

import json

from iqclassifier.cli import main

from conftest import tone_dataset


def test_train_then_evaluate_roundtrip(tmp_path, capsys):
    manifest = tone_dataset(tmp_path / "ds", n_classes=4, frames_per_class=40, samples=256)
    run = tmp_path / "run"
    assert main(
        [
            "train",
            "--manifest", str(manifest),
            "--out", str(run),
            "--epochs", "20",
            "--batch-size", "16",
            "--filters", "8",
            "--patience", "6",
            "--min-epochs", "16",
            "--seed", "3",
        ]
    ) == 0
    assert (run / "model.pt").exists()
    assert (run / "training_curve.csv").exists()

    assert main(["evaluate", "--model", str(run / "model.pt"), "--out", str(run)]) == 0
    assert (run / "confusion.csv").exists()
    assert (run / "predictions.csv").exists()
    assert (run / "confusion.png").exists()
    summary = json.loads((run / "evaluation.json").read_text())
    assert summary["overall_accuracy"] >= 0.9
    assert summary["test_frames"] == 32


def test_cli_reports_errors_as_json(tmp_path, capsys):
    code = main(["train", "--manifest", str(tmp_path / "missing.json"), "--out", str(tmp_path)])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert "error" in err
