"""End-to-end command-line behavior: artifacts, exit codes, determinism."""

import filecmp
import json
import shutil

import numpy as np
import pytest

from vrsick.cli import main
from vrsick.fseq import read_attribution_file
from vrsick.attribution import temporal_importance

SYNTH_ARGS = ["--sessions", "16", "--frames", "20", "--dim", "8",
              "--classes", "2", "--seed", "1"]
TRAIN_ARGS = ["--folds", "2", "--epochs", "2", "--batch-size", "4",
              "--hidden-size", "4", "--seed", "0", "--class-count", "2",
              "--reduce-mode", "max_pool", "--reduce-k", "4"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-data")
    assert main(["synth", "--out", str(out)] + SYNTH_ARGS) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, data_dir):
    out = tmp_path_factory.mktemp("cli-run")
    code = main(["train", "--data", str(data_dir / "manifest.json"),
                 "--out", str(out)] + TRAIN_ARGS)
    assert code == 0
    return out


class TestParsing:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "vrsick 0.1.0" in capsys.readouterr().out

    def test_help_exits_zero(self):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_unknown_flag_is_exit_one(self, capsys):
        assert main(["synth", "--out", "x", "--bogus"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_command_is_exit_one(self, capsys):
        assert main([]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_subcommand_is_exit_one(self):
        assert main(["transmogrify"]) == 1


class TestSynth:
    def test_writes_manifest_and_features(self, data_dir, capsys):
        assert (data_dir / "manifest.json").exists()
        files = sorted((data_dir / "features").glob("*.fseq"))
        assert len(files) == 16
        assert files[0].name == "synth-0000.fseq"

    def test_reruns_are_byte_identical(self, data_dir, tmp_path):
        again = tmp_path / "again"
        assert main(["synth", "--out", str(again)] + SYNTH_ARGS) == 0
        assert (
            (data_dir / "manifest.json").read_bytes()
            == (again / "manifest.json").read_bytes()
        )
        names = [p.name for p in sorted((data_dir / "features").glob("*.fseq"))]
        match, mismatch, errors = filecmp.cmpfiles(
            data_dir / "features", again / "features", names, shallow=False
        )
        assert mismatch == [] and errors == []
        assert len(match) == 16

    def test_progress_output(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path / "d")] + SYNTH_ARGS) == 0
        out = capsys.readouterr().out
        assert "wrote 16 samples" in out
        assert "template-matcher accuracy" in out

    def test_invalid_spec_is_exit_one(self, tmp_path, capsys):
        code = main(["synth", "--out", str(tmp_path / "d"), "--classes", "1"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestValidate:
    def test_reports_dataset_statistics(self, data_dir, capsys):
        assert main(["validate", "--data", str(data_dir / "manifest.json")]) == 0
        out = capsys.readouterr().out
        assert "samples: 16" in out
        assert "class_count: 2" in out
        assert "class_histogram: [8, 8]" in out
        assert "frames_per_sample: 20..20" in out
        assert out.rstrip().endswith("ok")

    def test_missing_manifest_is_exit_one(self, tmp_path, capsys):
        assert main(["validate", "--data", str(tmp_path / "nope.json")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_corrupted_feature_file_is_exit_one(self, data_dir, tmp_path, capsys):
        broken = tmp_path / "broken"
        shutil.copytree(data_dir, broken)
        victim = sorted((broken / "features").glob("*.fseq"))[0]
        victim.write_bytes(victim.read_bytes()[:-5])
        assert main(["validate", "--data", str(broken / "manifest.json")]) == 1
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_writes_all_artifacts(self, run_dir):
        for name in ("run_manifest.json", "report.json", "metrics.csv",
                     "fold0.ssm", "fold0.ssm.json", "fold1.ssm", "fold1.ssm.json"):
            assert (run_dir / name).exists(), name

    def test_run_manifest_records_resolved_config(self, run_dir, data_dir):
        doc = json.loads((run_dir / "run_manifest.json").read_text())
        assert doc["command"] == "train"
        assert doc["data"] == str(data_dir / "manifest.json")
        assert doc["package_version"] == "0.1.0"
        config = doc["config"]
        assert config["epochs"] == 2
        assert config["class_count"] == 2
        assert config["reduce.mode"] == "max_pool"
        assert config["reduce.k"] == 4

    def test_report_layout(self, run_dir):
        doc = json.loads((run_dir / "report.json").read_text())
        assert len(doc["folds"]) == 2
        assert 0.0 <= doc["mean_test_accuracy"] <= 1.0
        for fold in doc["folds"]:
            assert np.asarray(fold["confusion_matrix"]).shape == (2, 2)

    def test_metrics_header(self, run_dir):
        first = (run_dir / "metrics.csv").read_text().splitlines()[0]
        assert first == "fold,epoch,train_loss,train_acc,val_loss,val_acc"

    def test_progress_output(self, data_dir, tmp_path, capsys):
        code = main(["train", "--data", str(data_dir / "manifest.json"),
                     "--out", str(tmp_path / "r")] + TRAIN_ARGS)
        assert code == 0
        out = capsys.readouterr().out
        assert "fold 0: test_accuracy=" in out
        assert "mean: test_accuracy=" in out

    def test_rerun_is_byte_identical(self, run_dir, data_dir, tmp_path):
        again = tmp_path / "again"
        assert main(["train", "--data", str(data_dir / "manifest.json"),
                     "--out", str(again)] + TRAIN_ARGS) == 0
        for name in ("report.json", "metrics.csv", "fold0.ssm", "fold1.ssm",
                     "fold0.ssm.json"):
            assert (run_dir / name).read_bytes() == (again / name).read_bytes(), name

    def test_flags_override_config_file(self, data_dir, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(
            {"epochs": 3, "hidden_size": 6, "class_count": 2,
             "folds": 2, "batch_size": 4}
        ))
        out = tmp_path / "r"
        code = main(["train", "--data", str(data_dir / "manifest.json"),
                     "--out", str(out), "--config", str(config_path),
                     "--epochs", "1"])
        assert code == 0
        resolved = json.loads((out / "run_manifest.json").read_text())["config"]
        assert resolved["epochs"] == 1       # flag beats config file
        assert resolved["hidden_size"] == 6  # config file beats default

    def test_config_file_unknown_key_is_exit_one(self, data_dir, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"warmup_epochs": 2}))
        code = main(["train", "--data", str(data_dir / "manifest.json"),
                     "--out", str(tmp_path / "r"), "--config", str(config_path)])
        assert code == 1
        assert "warmup_epochs" in capsys.readouterr().err

    def test_class_count_mismatch_names_the_fix(self, data_dir, tmp_path, capsys):
        code = main(["train", "--data", str(data_dir / "manifest.json"),
                     "--out", str(tmp_path / "r"), "--epochs", "1"])
        assert code == 1
        err = capsys.readouterr().err
        assert "2 classes" in err
        assert "--class-count 2" in err


class TestEval:
    def test_scores_full_dataset(self, run_dir, data_dir, tmp_path, capsys):
        report_path = tmp_path / "eval.json"
        code = main(["eval", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"),
                     "--out", str(report_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "samples: 16" in out
        assert "accuracy:" in out
        doc = json.loads(report_path.read_text())
        assert set(doc) == {"accuracy", "loss", "confusion_matrix", "sample_count"}
        assert doc["sample_count"] == 16
        assert np.isclose(
            np.asarray(doc["confusion_matrix"]).trace() / 16, doc["accuracy"]
        )

    def test_id_subset(self, run_dir, data_dir, capsys):
        code = main(["eval", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"), "--ids", "0,3,5"])
        assert code == 0
        assert "samples: 3" in capsys.readouterr().out

    def test_bad_ids_are_exit_one(self, run_dir, data_dir, capsys):
        base = ["eval", "--checkpoint", str(run_dir / "fold0.ssm"),
                "--data", str(data_dir / "manifest.json")]
        assert main(base + ["--ids", "zero"]) == 1
        assert main(base + ["--ids", "99"]) == 1
        err = capsys.readouterr().err
        assert "out of range" in err

    def test_feature_width_mismatch_is_exit_one(self, run_dir, tmp_path, capsys):
        other = tmp_path / "wide"
        assert main(["synth", "--out", str(other), "--sessions", "4",
                     "--frames", "20", "--dim", "12", "--classes", "2",
                     "--seed", "2"]) == 0
        code = main(["eval", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(other / "manifest.json")])
        assert code == 1
        assert "input width" in capsys.readouterr().err

    def test_missing_checkpoint_is_exit_one(self, data_dir, tmp_path):
        assert main(["eval", "--checkpoint", str(tmp_path / "no.ssm"),
                     "--data", str(data_dir / "manifest.json")]) == 1


@pytest.fixture(scope="module")
def attr_dir(tmp_path_factory, run_dir, data_dir):
    out = tmp_path_factory.mktemp("cli-attr")
    code = main(["attribute", "--checkpoint", str(run_dir / "fold0.ssm"),
                 "--data", str(data_dir / "manifest.json"),
                 "--ids", "0,1", "--out", str(out),
                 "--ig-steps", "8", "--dump-scores"])
    assert code == 0
    return out


class TestAttribute:
    def test_writes_expected_files(self, attr_dir):
        names = {p.name for p in attr_dir.iterdir()}
        assert names == {"importance_0.csv", "importance_1.csv",
                         "importance_mean.csv", "scores_0.attr", "scores_1.attr"}

    def test_dumped_scores_match_importance_csv(self, attr_dir):
        scores = read_attribution_file(attr_dir / "scores_0.attr")
        assert scores.shape == (5, 8)  # 20 frames pooled by 4, dim 8
        curve = temporal_importance(scores, "mean_abs")
        rows = (attr_dir / "importance_0.csv").read_text().splitlines()[1:]
        from_csv = np.array([float(r.split(",")[1]) for r in rows])
        np.testing.assert_allclose(from_csv, curve, atol=1e-12)

    def test_mean_curve_averages_per_sample_curves(self, attr_dir):
        def read_curve(name):
            rows = (attr_dir / name).read_text().splitlines()[1:]
            return np.array([float(r.split(",")[1]) for r in rows])

        mean = read_curve("importance_mean.csv")
        a = read_curve("importance_0.csv")
        b = read_curve("importance_1.csv")
        np.testing.assert_allclose(mean, (a + b) / 2.0, atol=1e-12)

    def test_integrated_reports_completeness_gap(self, run_dir, data_dir,
                                                 tmp_path, capsys):
        code = main(["attribute", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"),
                     "--ids", "2", "--out", str(tmp_path / "a"),
                     "--ig-steps", "4"])
        assert code == 0
        out = capsys.readouterr().out
        assert "completeness_gap=" in out
        assert "class=" in out

    def test_standard_method_skips_gap(self, run_dir, data_dir, tmp_path, capsys):
        code = main(["attribute", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"),
                     "--ids", "2", "--out", str(tmp_path / "a"),
                     "--method", "standard"])
        assert code == 0
        assert "completeness_gap" not in capsys.readouterr().out

    def test_target_class_out_of_range_is_exit_one(self, run_dir, data_dir,
                                                   tmp_path, capsys):
        code = main(["attribute", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"),
                     "--ids", "0", "--out", str(tmp_path / "a"),
                     "--target-class", "99"])
        assert code == 1
        assert "target_class 99" in capsys.readouterr().err

    def test_reruns_are_byte_identical(self, attr_dir, run_dir, data_dir, tmp_path):
        again = tmp_path / "again"
        assert main(["attribute", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"),
                     "--ids", "0,1", "--out", str(again),
                     "--ig-steps", "8", "--dump-scores"]) == 0
        for name in ("importance_0.csv", "importance_mean.csv", "scores_1.attr"):
            assert (attr_dir / name).read_bytes() == (again / name).read_bytes()


class TestExportPlot:
    def test_metrics_pivot(self, run_dir, tmp_path):
        out = tmp_path / "plots"
        assert main(["export-plot", "--metrics", str(run_dir / "metrics.csv"),
                     "--out", str(out)]) == 0
        loss_lines = (out / "loss_curves.csv").read_text().splitlines()
        assert loss_lines[0] == "epoch,fold0,fold1"
        assert len(loss_lines) == 3  # header + 2 epochs
        acc_lines = (out / "accuracy_curves.csv").read_text().splitlines()
        assert acc_lines[0] == "epoch,fold0,fold1"
        # pivoted cells come verbatim from the metrics file
        metrics = (run_dir / "metrics.csv").read_text().splitlines()[1:]
        fold0_epoch1 = metrics[0].split(",")
        assert loss_lines[1].split(",")[1] == fold0_epoch1[4]
        assert acc_lines[1].split(",")[1] == fold0_epoch1[5]

    def test_importance_table(self, run_dir, data_dir, tmp_path):
        attr = tmp_path / "attr"
        assert main(["attribute", "--checkpoint", str(run_dir / "fold0.ssm"),
                     "--data", str(data_dir / "manifest.json"),
                     "--ids", "0,1", "--out", str(attr), "--ig-steps", "2"]) == 0
        out = tmp_path / "plots"
        assert main(["export-plot", "--out", str(out),
                     "--importance", str(attr / "importance_0.csv"),
                     str(attr / "importance_mean.csv")]) == 0
        lines = (out / "importance_table.csv").read_text().splitlines()
        assert lines[0] == "step,importance_0,importance_mean"
        assert len(lines) == 6  # header + 5 steps
        source = (attr / "importance_0.csv").read_text().splitlines()[1]
        assert lines[1].split(",")[1] == source.split(",")[1]

    def test_no_inputs_is_exit_one(self, tmp_path, capsys):
        assert main(["export-plot", "--out", str(tmp_path / "p")]) == 1
        assert "needs --metrics" in capsys.readouterr().err

    def test_missing_metrics_file_is_exit_one(self, tmp_path):
        assert main(["export-plot", "--out", str(tmp_path / "p"),
                     "--metrics", str(tmp_path / "no.csv")]) == 1

    def test_wrong_columns_are_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        assert main(["export-plot", "--out", str(tmp_path / "p"),
                     "--metrics", str(bad)]) == 1
        assert "missing columns" in capsys.readouterr().err
