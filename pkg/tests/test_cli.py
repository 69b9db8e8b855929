import csv
import json

import numpy as np
import pytest

from scscreen.baseline import FEATURE_NAMES, load_element_features
from scscreen.cli import main
from scscreen.nn import load_checkpoint

from test_screen import COLD, cod_world, eval_list_rows, sc_world, screen_cod


def write_input_csv(path, records):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["formula", "tc_K", "year"])
        for r in records:
            w.writerow(
                [
                    r.raw_formula,
                    "" if r.tc_kelvin is None else r.tc_kelvin,
                    "" if r.year is None else r.year,
                ]
            )


TINY_MODEL = {
    "conv_layers": 1,
    "channels_per_layer": 4,
    "dense_hidden": 0,
    "tc_transform": "linear",
    "seed": 7,
}
TINY_TRAIN = {"learning_rate": 2e-2, "batch_size": 8, "epochs": 3, "shuffle_seed": 3}


def write_config(path, **overrides):
    cfg = {"name": "cli-toy", "model": dict(TINY_MODEL), "train": dict(TINY_TRAIN)}
    cfg.update(overrides)
    with open(path, "w") as f:
        json.dump(cfg, f)
    return str(path)


@pytest.fixture
def world(tmp_path):
    paths = {
        "sc": tmp_path / "sc.csv",
        "cod": tmp_path / "cod.csv",
        "eval": tmp_path / "eval.csv",
        "out": tmp_path / "out",
    }
    write_input_csv(paths["sc"], sc_world())
    write_input_csv(paths["cod"], screen_cod())
    write_input_csv(paths["eval"], eval_list_rows())
    return paths


class TestParse:
    def test_worked_example(self, capsys):
        assert main(["parse", "--formula", "H2He3"]) == 0
        assert capsys.readouterr().out.strip() == "H:0.4 He:0.6"

    def test_json_output(self, capsys):
        assert main(["parse", "--formula", "H2He3", "--json"]) == 0
        assert json.loads(capsys.readouterr().out) == {"H": 0.4, "He": 0.6}

    def test_bad_formula_is_data_error(self, capsys):
        assert main(["parse", "--formula", "Xq9"]) == 2
        assert "scscreen" in capsys.readouterr().err

    def test_missing_flag_is_usage_error(self):
        assert main(["parse"]) == 1


class TestUsage:
    def test_no_subcommand(self):
        assert main([]) == 1

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "scscreen" in capsys.readouterr().out

    def test_help(self):
        assert main(["--help"]) == 0

    def test_bad_env_seed(self, monkeypatch, capsys):
        monkeypatch.setenv("SCSCREEN_SEED", "not-a-number")
        assert main(["parse", "--formula", "Nb"]) == 1
        assert "environment" in capsys.readouterr().err


class TestEncode:
    def test_single_element_tensor(self, tmp_path, capsys):
        assert main(["encode", "--formula", "Nb", "--out", str(tmp_path)]) == 0
        with open(tmp_path / "tensor.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["channel", "row", "col", "value"]
        assert len(rows) == 1 + 4 * 7 * 32
        nonzero = [r for r in rows[1:] if float(r[3]) != 0.0]
        assert nonzero == [["D", "5", "19", "1"]]

    def test_manifest_written(self, tmp_path):
        main(["encode", "--formula", "Nb", "--out", str(tmp_path)])
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "encode"
        assert manifest["status"] == "ok"
        assert manifest["outputs"] == ["tensor.csv"]
        assert manifest["versions"]["scscreen"]

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["encode", "--formula", "MgB2", "--out", str(a)])
        main(["encode", "--formula", "MgB2", "--out", str(b)])
        assert (a / "tensor.csv").read_bytes() == (b / "tensor.csv").read_bytes()


class TestDatasetBuild:
    def test_clean_and_report(self, world, capsys):
        code = main(
            ["dataset-build", "--sc", str(world["sc"]), "--cod", str(world["cod"]),
             "--out", str(world["out"])]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "after cleaning" in out
        for name in ("sc_clean.csv", "catalogue_clean.csv", "manifest.json"):
            assert (world["out"] / name).exists()
        manifest = json.loads((world["out"] / "manifest.json").read_text())
        assert set(manifest["inputs"]) == {"sc", "cod"}
        assert len(manifest["inputs"]["sc"]["fingerprint"]) == 64

    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["dataset-build", "--sc", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path)]) == 2

    def test_manifest_survives_schema_failure(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("name,tc\nfoo,1\n")
        out = tmp_path / "out"
        assert main(["dataset-build", "--sc", str(bad), "--out", str(out)]) == 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "started"


class TestTrain:
    def test_train_writes_model_and_trace(self, world, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json")
        out = world["out"]
        code = main(["train", "--config", cfg, "--data", str(world["sc"]),
                     "--out", str(out)])
        assert code == 0
        assert "final loss" in capsys.readouterr().out
        params = load_checkpoint(out / "model.npz")
        assert params.config.conv_layers == 1
        with open(out / "trace.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["epoch", "mean_loss"]
        assert len(rows) == 1 + TINY_TRAIN["epochs"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "ok"
        assert manifest["config"]["model"]["conv_layers"] == 1

    def test_same_seed_reruns_byte_identical(self, world, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["train", "--config", cfg, "--data", str(world["sc"]),
                         "--out", str(out)]) == 0
        assert (a / "model.npz").read_bytes() == (b / "model.npz").read_bytes()
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()

    def test_seed_override_changes_model(self, world, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        a, b = tmp_path / "a", tmp_path / "b"
        main(["train", "--config", cfg, "--data", str(world["sc"]), "--out", str(a)])
        main(["train", "--config", cfg, "--data", str(world["sc"]), "--out", str(b),
              "--seed", "99"])
        assert (a / "model.npz").read_bytes() != (b / "model.npz").read_bytes()
        manifest = json.loads((b / "manifest.json").read_text())
        assert manifest["config"]["model"]["seed"] == 99

    def test_divergence_exit_code_and_manifest(self, world, tmp_path):
        cfg = write_config(tmp_path / "cfg.json",
                           train=dict(TINY_TRAIN, learning_rate=1e30))
        out = tmp_path / "out"
        with np.errstate(over="ignore", invalid="ignore"):
            code = main(["train", "--config", cfg, "--data", str(world["sc"]),
                         "--out", str(out)])
        assert code == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "started"

    def test_bad_config_is_data_error(self, world, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"name": "x", "model": {"layers": 1}}))
        assert main(["train", "--config", str(cfg), "--data", str(world["sc"]),
                     "--out", str(tmp_path / "out")]) == 2


class TestEvaluate:
    def test_reports_and_table(self, world, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json",
                           training_filter={"year_before": 2010},
                           thresholds=[0, 10])
        code = main(["evaluate", "--config", cfg, "--sc", str(world["sc"]),
                     "--cod", str(world["cod"]), "--eval", str(world["eval"]),
                     "--out", str(world["out"])])
        assert code == 0
        assert "Precision" in capsys.readouterr().out
        with open(world["out"] / "reports.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) == 3  # header + one row per threshold
        assert rows[1][0] == "0"
        assert rows[2][0] == "10"

    def test_unresolved_eval_formula_is_data_error(self, world, tmp_path):
        cfg = write_config(tmp_path / "cfg.json",
                           training_filter={"year_before": 2010})
        bad_eval = tmp_path / "eval.csv"
        bad_eval.write_text("formula,tc_K,year\nLaFeAsO1-xFx,26,2012\n")
        assert main(["evaluate", "--config", cfg, "--sc", str(world["sc"]),
                     "--cod", str(world["cod"]), "--eval", str(bad_eval),
                     "--out", str(world["out"])]) == 2


class TestScreen:
    def test_candidates_written_and_rerun_identical(self, world, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json", fold_size=12)
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["screen", "--config", cfg, "--sc", str(world["sc"]),
                         "--cod", str(world["cod"]), "--out", str(out)]) == 0
        assert "predicted above" in capsys.readouterr().out
        with open(a / "candidates.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["formula", "predicted_tc_K", "fold_id", "family"]
        assert len(rows) == 1 + 34  # cuprate and FeSC rows are gone
        assert (a / "candidates.csv").read_bytes() == (b / "candidates.csv").read_bytes()
        assert (a / "threshold_counts.csv").read_bytes() == (b / "threshold_counts.csv").read_bytes()

    def test_config_without_fold_size_is_data_error(self, world, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        assert main(["screen", "--config", cfg, "--sc", str(world["sc"]),
                     "--cod", str(world["cod"]), "--out", str(world["out"])]) == 2

    def test_config_via_environment(self, world, tmp_path, monkeypatch):
        cfg = write_config(tmp_path / "cfg.json", fold_size=12)
        monkeypatch.setenv("SCSCREEN_CONFIG", cfg)
        monkeypatch.setenv("SCSCREEN_OUT", str(world["out"]))
        assert main(["screen", "--sc", str(world["sc"]),
                     "--cod", str(world["cod"])]) == 0
        assert (world["out"] / "candidates.csv").exists()


class TestDiscover:
    def test_runs_and_histogram(self, world, tmp_path):
        fesc = tmp_path / "sc_fesc.csv"
        rows = sc_world()
        from scscreen.dataset import Source, make_record
        rows += [make_record("LaFeAsO", 26.0, 2008, Source.SUPERCON),
                 make_record("FeSe", 8.0, 2008, Source.SUPERCON)]
        write_input_csv(fesc, rows)
        cfg = write_config(tmp_path / "cfg.json",
                           training_filter={"year_before": 2008},
                           test_set="FESC", repeats=2)
        code = main(["discover", "--config", cfg, "--sc", str(fesc),
                     "--cod", str(world["cod"]), "--eval", str(world["eval"]),
                     "--out", str(world["out"])])
        assert code == 0
        with open(world["out"] / "runs.csv", newline="") as f:
            runs = list(csv.reader(f))
        assert len(runs) == 3
        assert runs[1][6] in ("true", "false")
        with open(world["out"] / "histogram.csv", newline="") as f:
            hist = list(csv.reader(f))
        assert hist[0] == ["bin_left", "bin_right", "count"]
        assert sum(int(r[2]) for r in hist[1:]) == 2


def write_features_csv(path, symbols):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["symbol", *FEATURE_NAMES])
        rng = np.random.default_rng(5)
        for i, s in enumerate(symbols):
            w.writerow([s, *[f"{v:.6g}" for v in rng.normal(i, 1.0, len(FEATURE_NAMES))]])


class TestBaseline:
    def test_template_mode(self, tmp_path):
        path = tmp_path / "template.csv"
        assert main(["baseline", "--template", str(path)]) == 0
        table = load_element_features(path)  # blank rows are simply skipped
        assert table == {}

    def test_forest_run(self, world, tmp_path, capsys):
        feats = tmp_path / "features.csv"
        write_features_csv(feats, ["Nb", *COLD, "Y", "Ba", "Cu", "O", "La", "Fe", "As"])
        code = main(["baseline", "--sc", str(world["sc"]), "--cod", str(world["cod"]),
                     "--features", str(feats), "--trees", "10",
                     "--test-fraction", "0.2", "--out", str(world["out"])])
        assert code == 0
        assert "forest" in capsys.readouterr().out
        with open(world["out"] / "baseline_report.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) == 2
        assert rows[0][0] == "threshold_K"

    def test_missing_features_flag_is_usage_error(self, world, capsys):
        assert main(["baseline", "--sc", str(world["sc"]),
                     "--cod", str(world["cod"])]) == 1
        assert "--features" in capsys.readouterr().err

    def test_element_missing_from_table_is_data_error(self, world, tmp_path):
        feats = tmp_path / "features.csv"
        write_features_csv(feats, ["Nb"])  # cold elements absent
        assert main(["baseline", "--sc", str(world["sc"]), "--cod", str(world["cod"]),
                     "--features", str(feats), "--trees", "5",
                     "--out", str(world["out"])]) == 2
