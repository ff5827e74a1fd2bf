import csv
import json

import pytest

from screen_rating.cli import COMMANDS, build_parser, main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_conv_cost_reference_row(tmp_path, capsys):
    out = tmp_path / "cost.json"
    assert main(["conv-cost", "--dk", "3", "--m", "16", "--n", "32", "--df", "8",
                 "--json", str(out), "--no-timestamp"]) == 0
    printed = capsys.readouterr().out
    assert "294912" in printed and "41984" in printed and "0.142361" in printed
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["results"]["ratio"] == 0.142361
    assert "generated_at" not in payload


def test_conv_cost_needs_all_dimensions(capsys):
    assert main(["conv-cost", "--dk", "3"]) == 1
    assert "--df" in capsys.readouterr().err


def test_conv_cost_rejects_kernel_larger_than_map():
    assert main(["conv-cost", "--dk", "9", "--m", "1", "--n", "1", "--df", "3"]) == 1


def test_encoder_cost_table(tmp_path, capsys):
    out = tmp_path / "enc.json"
    assert main(["conv-cost", "--encoder", "--preset", "desk", "--json", str(out)]) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["totals"]["separable_macs"] < payload["totals"]["standard_macs"]
    assert payload["parameters"]["total"] > 0
    assert "stem (standard)" in capsys.readouterr().out


def test_unknown_flag_exits_one(capsys):
    assert main(["train", "--manifest", "m.csv", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_exits_one():
    assert main([]) == 1


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_help_lists_flags(command, capsys):
    assert main([command, "--help"]) == 0
    out = capsys.readouterr().out
    assert "--json" in out and "--no-timestamp" in out


def test_train_exposes_canonical_flags():
    help_text = build_parser()._subparsers._group_actions[0].choices["train"].format_help()
    for flag in ("--manifest", "--out", "--preset", "--seed", "--epochs", "--lr",
                 "--batch-size", "--dropout", "--activation", "--loss", "--target-scale"):
        assert flag in help_text


def test_gen_synthetic_and_data_stats(tmp_path, capsys):
    synth = tmp_path / "synth"
    assert main(["gen-synthetic", "--n", "10", "--seed", "7", "--size", "32",
                 "--out", str(synth)]) == 0
    stats_json = tmp_path / "stats.json"
    assert main(["data-stats", "--manifest", str(synth / "manifest.csv"),
                 "--json", str(stats_json), "--no-timestamp"]) == 0
    payload = json.loads(stats_json.read_text(encoding="utf-8"))
    assert payload["stats"]["n"] == 10
    assert payload["load_report"]["rejected"] == 0
    assert "Ratings:" in capsys.readouterr().out


def test_gen_synthetic_json_is_reproducible(tmp_path):
    outputs = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.json"
        assert main(["gen-synthetic", "--n", "4", "--seed", "3", "--size", "32",
                     "--out", str(tmp_path / "synth"), "--json", str(path),
                     "--no-timestamp"]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_missing_manifest_is_a_runtime_failure(tmp_path, capsys):
    assert main(["data-stats", "--manifest", str(tmp_path / "absent.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_invalid_config_value_exits_one(tmp_path):
    assert main(["train", "--manifest", str(tmp_path / "m.csv"), "--dropout", "1.5"]) == 1


def test_distill_demo_writes_curve(tmp_path):
    out = tmp_path / "distill"
    assert main(["distill-demo", "--seed", "3", "--steps", "3", "--batch-size", "2",
                 "--out", str(out)]) == 0
    rows = read_csv(out / "distill.csv")
    assert [r["step"] for r in rows] == ["1", "2", "3"]
    assert list(rows[0]) == ["step", "mlm", "ce", "cos", "total"]


def test_distill_demo_needs_a_step(tmp_path):
    assert main(["distill-demo", "--steps", "0", "--out", str(tmp_path)]) == 1


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen-synthetic", "--n", "16", "--seed", "7", "--size", "64",
                 "--out", str(root / "synth")]) == 0
    manifest = root / "synth" / "manifest.csv"
    for name in ("run_a", "run_b"):
        assert main(["train", "--manifest", str(manifest), "--preset", "desk",
                     "--epochs", "1", "--seed", "7", "--out", str(root / name),
                     "--json", str(root / f"{name}.json"), "--no-timestamp"]) == 0
    return root, manifest


def test_train_writes_history_and_checkpoint(trained_run):
    root, _ = trained_run
    rows = read_csv(root / "run_a" / "history.csv")
    assert rows and rows[0]["epoch"] == "1"
    assert (root / "run_a" / "checkpoint.npz").exists()


def test_train_is_reproducible(trained_run):
    root, _ = trained_run
    assert (root / "run_a.json").read_bytes() == (root / "run_b.json").read_bytes()
    assert (root / "run_a" / "history.csv").read_bytes() == \
        (root / "run_b" / "history.csv").read_bytes()


def test_eval_and_predict(trained_run, tmp_path):
    root, manifest = trained_run
    checkpoint = root / "run_a" / "checkpoint.npz"
    eval_json = tmp_path / "eval.json"
    assert main(["eval", "--checkpoint", str(checkpoint), "--manifest", str(manifest),
                 "--clamp", "--json", str(eval_json)]) == 0
    metrics = json.loads(eval_json.read_text(encoding="utf-8"))["metrics"]
    assert metrics["clamped"] is True
    assert set(metrics) >= {"mae", "mse", "rmse", "r2", "pearson_r", "n"}

    predictions = tmp_path / "pred.csv"
    assert main(["predict", "--checkpoint", str(checkpoint), "--manifest", str(manifest),
                 "--out", str(predictions)]) == 0
    rows = read_csv(predictions)
    assert len(rows) == 16
    assert all(1.0 <= float(r["displayed"]) <= 5.0 for r in rows)


def test_eval_rejects_a_corrupt_checkpoint(trained_run, tmp_path):
    _, manifest = trained_run
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"garbage")
    assert main(["eval", "--checkpoint", str(bad), "--manifest", str(manifest)]) == 2


@pytest.mark.slow
def test_ablate_activations(trained_run, tmp_path):
    _, manifest = trained_run
    out = tmp_path / "ablate"
    assert main(["ablate", "--suite", "activations", "--manifest", str(manifest),
                 "--epochs", "1", "--out", str(out), "--no-timestamp"]) == 0
    rows = read_csv(out / "ablation.csv")
    assert [r["variant"] for r in rows] == ["Swish", "Mish", "GoLU", "GELU"]
    assert list(rows[0])[:6] == ["variant", "mae", "mse", "rmse", "r2", "pearson_r"]


def test_paper_preset_cost_table(tmp_path):
    out = tmp_path / "paper.json"
    assert main(["conv-cost", "--encoder", "--preset", "paper", "--json", str(out),
                 "--no-timestamp"]) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["preset"] == "paper"
    assert payload["layers"][0]["layer"] == "stem (standard)"
    assert payload["parameters"]["total"] > 0


def test_manifest_that_is_not_utf8_exits_one(tmp_path, capsys):
    path = tmp_path / "m.csv"
    path.write_bytes(b"image_path,caption,category,avg_rating,num_ratings\n"
                     b"a.png,caf\xe9,social,3.0,2\n")
    assert main(["data-stats", "--manifest", str(path)]) == 1
    assert "UTF-8" in capsys.readouterr().err


def test_train_resumes_a_checkpoint(trained_run, tmp_path):
    root, manifest = trained_run
    out = tmp_path / "resumed"
    assert main(["train", "--manifest", str(manifest), "--resume",
                 str(root / "run_a" / "checkpoint.npz"), "--epochs", "2",
                 "--out", str(out), "--no-timestamp"]) == 0
    rows = read_csv(out / "history.csv")
    assert sorted({r["epoch"] for r in rows}) == ["1", "2"]
    assert (out / "checkpoint.npz").exists()


def test_resume_without_epochs_exits_one(trained_run):
    root, manifest = trained_run
    assert main(["train", "--manifest", str(manifest), "--resume",
                 str(root / "run_a" / "checkpoint.npz")]) == 1


def test_gen_synthetic_rejects_a_tiny_canvas(tmp_path, capsys):
    assert main(["gen-synthetic", "--n", "4", "--size", "2", "--out", str(tmp_path)]) == 1
    assert "size" in capsys.readouterr().err
