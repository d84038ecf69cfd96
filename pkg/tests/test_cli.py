"""End-to-end checks for the command-line entry point.

Every test drives main(argv) directly and asserts on exit codes and on
the files left behind, exactly the way a shell user would observe the
tool.
"""

import json
import os

import numpy as np
import pytest

from vslct.cli import main
from vslct.data import load_csv
from vslct.network import load_checkpoint


def run_cli(*argv):
    return main([str(a) for a in argv])


def gen_csv(path, n0, n1, seed, dim=4, sep=2.0):
    code = run_cli("gen-data", "--out", path, "--n0", n0, "--n1", n1, "--dim", dim, "--sep", sep, "--seed", seed)
    assert code == 0
    return str(path)


class TestGenData:
    """Dataset generation and the shared output-handling options."""

    def test_writes_loadable_csv(self, tmp_path):
        path = gen_csv(tmp_path / "d.csv", n0=30, n1=10, seed=3)
        data = load_csv(path)
        assert data.counts.n0 == 30
        assert data.counts.n1 == 10
        assert data.dim == 4

    def test_optional_subsampling(self, tmp_path):
        path = tmp_path / "d.csv"
        code = run_cli("gen-data", "--out", path, "--n0", 200, "--n1", 100, "--seed", 0, "--beta", 10)
        assert code == 0
        assert load_csv(path).counts.n1 == 20

    def test_existing_output_is_an_error_by_default(self, tmp_path, capsys):
        path = gen_csv(tmp_path / "d.csv", n0=10, n1=5, seed=0)
        code = run_cli("gen-data", "--out", path, "--n0", 10, "--n1", 5, "--seed", 0)
        assert code == 1
        assert "already exists" in capsys.readouterr().err

    def test_if_exists_skip_leaves_file_untouched(self, tmp_path):
        path = gen_csv(tmp_path / "d.csv", n0=10, n1=5, seed=0)
        before = os.stat(path).st_mtime_ns
        code = run_cli("gen-data", "--out", path, "--n0", 99, "--n1", 99, "--seed", 1, "--if-exists", "skip")
        assert code == 0
        assert os.stat(path).st_mtime_ns == before

    def test_if_exists_overwrite_replaces(self, tmp_path):
        path = gen_csv(tmp_path / "d.csv", n0=10, n1=5, seed=0)
        code = run_cli("gen-data", "--out", path, "--n0", 12, "--n1", 6, "--seed", 1, "--if-exists", "overwrite")
        assert code == 0
        assert load_csv(path).counts.n0 == 12

    def test_out_root_env_prefixes_relative_paths(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VSLCT_OUT_ROOT", str(tmp_path))
        monkeypatch.chdir(tmp_path)
        code = run_cli("gen-data", "--out", os.path.join("nested", "d.csv"), "--n0", 10, "--n1", 5, "--seed", 0)
        assert code == 0
        assert (tmp_path / "nested" / "d.csv").exists()

    def test_out_root_env_leaves_absolute_paths_alone(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VSLCT_OUT_ROOT", str(tmp_path / "elsewhere"))
        path = tmp_path / "d.csv"
        assert run_cli("gen-data", "--out", path, "--n0", 10, "--n1", 5, "--seed", 0) == 0
        assert path.exists()
        assert not (tmp_path / "elsewhere").exists()


class TestTrain:
    """Single-run training from JSON configs."""

    def write_config(self, tmp_path, payload):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def baseline_config(self, tmp_path):
        return self.write_config(
            tmp_path,
            {
                "mode": "baseline",
                "hyper": {"omega": 0.5, "gamma": 0.0, "tau": 1.0},
                "train": {"epochs": 2, "batch_size": 32, "seed": 0},
                "model": {"trunk_widths": [8, 8], "film_hidden": 8},
            },
        )

    def test_baseline_checkpoint_roundtrips(self, tmp_path, capsys):
        data = gen_csv(tmp_path / "train.csv", n0=60, n1=20, seed=0)
        out = tmp_path / "model.json"
        code = run_cli("train", "--config", self.baseline_config(tmp_path), "--data", data, "--out", out)
        assert code == 0
        model, meta = load_checkpoint(out)
        assert model.config.input_dim == 4
        assert meta["mode"] == "baseline"
        assert "final epoch loss" in capsys.readouterr().out

    def test_lct_mode_with_test_auc(self, tmp_path, capsys):
        data = gen_csv(tmp_path / "train.csv", n0=60, n1=20, seed=0)
        test = gen_csv(tmp_path / "test.csv", n0=40, n1=40, seed=1)
        config = self.write_config(
            tmp_path,
            {
                "mode": "lct",
                "lct": {
                    "base": {"omega": 0.5, "gamma": 0.0, "tau": 0.0},
                    "conditioned": {"tau": {"a": 0.0, "b": 3.0, "h_b": 0.0}},
                },
                "train": {"epochs": 2, "batch_size": 32, "seed": 0},
                "model": {"trunk_widths": [8, 8], "film_hidden": 8},
                "eval_lambda": 1.5,
            },
        )
        out = tmp_path / "model.json"
        code = run_cli("train", "--config", config, "--data", data, "--test-data", test, "--out", out)
        assert code == 0
        model, meta = load_checkpoint(out)
        assert model.config.cond_dim == 1
        assert meta["mode"] == "lct"
        assert "test AUC" in capsys.readouterr().out

    def test_point_mass_conditioned_value_accepted(self, tmp_path):
        data = gen_csv(tmp_path / "train.csv", n0=60, n1=20, seed=0)
        config = self.write_config(
            tmp_path,
            {
                "mode": "lct",
                "lct": {
                    "base": {"omega": 0.5, "gamma": 0.0, "tau": 0.0},
                    "conditioned": {"tau": 2.0},
                },
                "train": {"epochs": 2, "batch_size": 32, "seed": 0},
                "model": {"trunk_widths": [8, 8], "film_hidden": 8},
            },
        )
        assert run_cli("train", "--config", config, "--data", data, "--out", tmp_path / "m.json") == 0

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        data = gen_csv(tmp_path / "train.csv", n0=30, n1=10, seed=0)
        config = self.write_config(
            tmp_path,
            {
                "mode": "baseline",
                "hyper": {"omega": 0.5, "gamma": 0.0, "tau": 0.0},
                "train": {"epochs": 2, "learning_rate": 0.1},
            },
        )
        code = run_cli("train", "--config", config, "--data", data, "--out", tmp_path / "m.json")
        assert code == 1
        err = capsys.readouterr().err
        assert "unknown keys" in err
        assert "learning_rate" in err

    def test_baseline_mode_rejects_lct_section(self, tmp_path, capsys):
        data = gen_csv(tmp_path / "train.csv", n0=30, n1=10, seed=0)
        config = self.write_config(
            tmp_path,
            {
                "mode": "baseline",
                "hyper": {"omega": 0.5, "gamma": 0.0, "tau": 0.0},
                "lct": {"base": {}, "conditioned": {"tau": 1.0}},
                "train": {"epochs": 2},
            },
        )
        code = run_cli("train", "--config", config, "--data", data, "--out", tmp_path / "m.json")
        assert code == 1
        assert "baseline mode" in capsys.readouterr().err

    def test_missing_data_file_exits_1(self, tmp_path, capsys):
        code = run_cli("train", "--config", self.baseline_config(tmp_path), "--data", tmp_path / "nope.csv", "--out", tmp_path / "m.json")
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_invalid_json_exits_1(self, tmp_path, capsys):
        data = gen_csv(tmp_path / "train.csv", n0=30, n1=10, seed=0)
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = run_cli("train", "--config", bad, "--data", data, "--out", tmp_path / "m.json")
        assert code == 1
        assert "invalid JSON" in capsys.readouterr().err


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    """One tiny sweep shared by the sweep/roc/analyze tests."""
    root = tmp_path_factory.mktemp("sweep")
    train = gen_csv(root / "train.csv", n0=120, n1=40, seed=0)
    test = gen_csv(root / "test.csv", n0=60, n1=60, seed=1)
    config = root / "sweep.json"
    config.write_text(
        json.dumps(
            {
                "train": {"epochs": 2, "batch_size": 32, "lr": 0.05, "seed": 0},
                "seeds": [0, 1],
                "eval_lambda": 1.5,
                "baseline_grid": {"omega": [0.5], "gamma": [0.0], "tau": [0.0]},
                "lct_grid": {
                    "h_b": [0.0],
                    "omega": [0.5],
                    "gamma": 0.0,
                    "conditioned": "tau",
                    "lambda_range": [0.0, 3.0],
                },
            }
        )
    )
    out_dir = root / "runs"
    code = run_cli("sweep", "--config", config, "--train-data", train, "--test-data", test, "--out-dir", out_dir)
    assert code == 0
    return {"root": root, "train": train, "test": test, "config": str(config), "out_dir": str(out_dir)}


class TestSweep:
    """Grid expansion, per-run persistence, and the summary file."""

    def test_summary_covers_every_run(self, sweep_dir):
        with open(os.path.join(sweep_dir["out_dir"], "summary.json")) as fh:
            summary = json.load(fh)
        assert len(summary["rows"]) == 4
        ids = {row["run_id"] for row in summary["rows"]}
        assert ids == {"base-w0.5-g0.0-t0.0-s0", "base-w0.5-g0.0-t0.0-s1", "lct-hb0.0-w0.5-s0", "lct-hb0.0-w0.5-s1"}
        for row in summary["rows"]:
            assert 0.0 <= row["auc"] <= 1.0
            assert isinstance(row["auc"], float)
        assert summary["stats"]["baseline"]["n"] == 2
        assert summary["stats"]["lct"]["n"] == 2

    def test_rerun_resumes_from_row_files(self, sweep_dir):
        row_file = os.path.join(sweep_dir["out_dir"], "base-w0.5-g0.0-t0.0-s0.json")
        before = os.stat(row_file).st_mtime_ns
        code = run_cli(
            "sweep",
            "--config", sweep_dir["config"],
            "--train-data", sweep_dir["train"],
            "--test-data", sweep_dir["test"],
            "--out-dir", sweep_dir["out_dir"],
        )
        assert code == 0
        assert os.stat(row_file).st_mtime_ns == before

    def test_config_without_any_grid_exits_1(self, sweep_dir, tmp_path, capsys):
        config = tmp_path / "empty.json"
        config.write_text(json.dumps({"train": {"epochs": 2}, "seeds": [0]}))
        code = run_cli(
            "sweep",
            "--config", config,
            "--train-data", sweep_dir["train"],
            "--test-data", sweep_dir["test"],
            "--out-dir", tmp_path / "runs",
        )
        assert code == 1
        assert "any runs" in capsys.readouterr().err


class TestRoc:
    """ROC aggregation over stored sweep rows."""

    def read_rows(self, path):
        with open(path) as fh:
            header = fh.readline().strip()
            body = np.array([[float(tok) for tok in line.split(",")] for line in fh])
        return header, body

    def test_aggregate_csv_shape(self, sweep_dir, tmp_path):
        out = tmp_path / "roc.csv"
        code = run_cli("roc", "--rows-dir", sweep_dir["out_dir"], "--points", 11, "--out", out)
        assert code == 0
        header, body = self.read_rows(out)
        assert header == "fpr,mean_tpr,std_tpr"
        assert body.shape == (11, 3)
        assert body[0, 0] == 0.0
        assert body[-1, 0] == 1.0
        assert np.all(np.diff(body[:, 1]) >= -1e-12)
        assert np.all(body[:, 2] >= 0.0)

    def test_select_filters_by_kind(self, sweep_dir, tmp_path, capsys):
        out = tmp_path / "roc.csv"
        code = run_cli("roc", "--rows-dir", sweep_dir["out_dir"], "--select", "lct", "--points", 5, "--out", out)
        assert code == 0
        assert "aggregated 2 curves" in capsys.readouterr().out

    def test_empty_selection_exits_1(self, tmp_path, capsys):
        os.makedirs(tmp_path / "rows")
        code = run_cli("roc", "--rows-dir", tmp_path / "rows", "--out", tmp_path / "roc.csv")
        assert code == 1
        assert "no sweep rows" in capsys.readouterr().err


class TestAnalyze:
    """Statistical report over a sweep summary."""

    def test_report_contents(self, sweep_dir, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli("analyze", "--summary", os.path.join(sweep_dir["out_dir"], "summary.json"), "--out", out)
        assert code == 0
        with open(out) as fh:
            report = json.load(fh)
        assert set(report["groups"]) == {"baseline", "lct"}
        for stats in report["groups"].values():
            assert stats["n"] == 2
            assert stats["min"] <= stats["mean"] <= stats["max"]
        paired = report["paired_by_seed"]
        assert paired["seeds"] == [0, 1]
        assert paired["df"] == 1
        assert 0.0 <= paired["p_value"] <= 1.0
        assert report["baseline_surface_fit"] is None

    def test_empty_summary_exits_1(self, tmp_path, capsys):
        summary = tmp_path / "summary.json"
        summary.write_text(json.dumps({"rows": []}))
        code = run_cli("analyze", "--summary", summary, "--out", tmp_path / "report.json")
        assert code == 1
        assert "no rows" in capsys.readouterr().err


class TestLossGeometry:
    """Loss-difference grid export and break-even reporting."""

    def test_grid_csv_and_line(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        code = run_cli("loss-geometry", "--beta", 100, "--tau", 1.0, "--steps", 5, "--out", out)
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "z0,z1,diff"
        assert len(lines) == 1 + 25
        printed = capsys.readouterr().out
        assert "break-even line" in printed
        assert "break-even softmax score" in printed

    def test_off_center_hypers_skip_softmax_score(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        code = run_cli("loss-geometry", "--beta", 10, "--omega", 0.9, "--steps", 3, "--out", out)
        assert code == 0
        assert "softmax score" not in capsys.readouterr().out


class TestDistCheck:
    """Sampler diagnostics for the linear interval distribution."""

    def test_reports_small_ks(self, capsys):
        code = run_cli("dist-check", "--a", 0, "--b", 3, "--h-b", 0, "--samples", 20000, "--seed", 1)
        assert code == 0
        out = capsys.readouterr().out
        assert "KS distance" in out
        ks = float(out.split("= ")[-1])
        assert ks < 0.02

    def test_max_ks_gate_fails_loudly(self, capsys):
        code = run_cli("dist-check", "--a", 0, "--b", 3, "--h-b", 0, "--samples", 2000, "--seed", 1, "--max-ks", 1e-9)
        assert code == 1
        assert "exceeds" in capsys.readouterr().err

    def test_optional_json_report(self, tmp_path):
        out = tmp_path / "ks.json"
        code = run_cli("dist-check", "--a", 0, "--b", 1, "--h-b", 2, "--samples", 5000, "--out", out)
        assert code == 0
        with open(out) as fh:
            report = json.load(fh)
        assert report["samples"] == 5000
        assert report["ks"] < 0.05


class TestUsageErrors:
    """argparse-level failures exit with status 2."""

    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_option(self):
        with pytest.raises(SystemExit) as exc:
            main(["gen-data", "--n0", "10", "--n1", "5"])
        assert exc.value.code == 2
