"""End-to-end command runs through ``main``."""

import json
from datetime import datetime, timedelta

import numpy as np
import pytest
import pytz
import yaml

from library.adapters import SeriesTable, write_csv
from library.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from library.model import read_header

RUN = {
    "experiment_id": "cli",
    "model": {
        "d_model": 8,
        "state_size": 4,
        "layers": 1,
        "d_inner": 8,
        "patch": {"patch_len": 8, "stride": 4, "lookback": 32},
    },
    "data": {
        "synth": {"length": 600, "channels": 3, "seed": 2},
        "lookback": 32,
        "horizon": 8,
    },
    "train": {"lr": 0.001, "epochs": 2, "batch_size": 16, "max_batches_per_epoch": 2},
}


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(RUN), encoding="utf-8")
    return path


@pytest.fixture
def trained(run_config, tmp_path):
    assert main(["train", "--config", str(run_config), "--out", str(tmp_path / "trained")]) == 0
    return tmp_path / "trained" / "best.pssm"


class TestUsage:
    def test_eval_needs_checkpoint(self):
        assert main(["eval"]) == EXIT_USAGE

    def test_unknown_flag(self):
        assert main(["synth", "--colour", "red", "--out", "x.csv"]) == EXIT_USAGE

    def test_unknown_command(self):
        assert main(["fit"]) == EXIT_USAGE

    def test_bad_override(self, run_config):
        assert main(["train", "--config", str(run_config), "--set", "train.lr=-1"]) == EXIT_USAGE

    def test_both_data_flags(self, run_config):
        args = ["train", "--config", str(run_config), "--csv", "a.csv", "--dataset", "ETTh1"]
        assert main(args) == EXIT_USAGE

    def test_missing_run_config(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "absent.yaml")]) == EXIT_DATA


class TestSynth:
    def test_single_channel_is_data_error(self, tmp_path, capsys):
        assert main(["synth", "--c", "1", "--out", str(tmp_path / "s.csv")]) == EXIT_DATA
        assert "at least 2 channels" in capsys.readouterr().err

    def test_writes_csv_and_metadata(self, tmp_path, capsys):
        out = tmp_path / "synth" / "cdt.csv"
        args = ["synth", "--regime", "linear", "--c", "3", "--t", "200", "--out", str(out)]
        assert main(args) == EXIT_OK
        assert out.read_text(encoding="utf-8").splitlines()[0] == "date,x0,x1,x2"
        meta = json.loads((tmp_path / "synth" / "cdt.meta.json").read_text(encoding="utf-8"))
        assert meta["config"]["regime"] == "linear"
        assert str(out) in capsys.readouterr().out


class TestTrainEval:
    def test_identical_runs_identical_metrics(self, run_config, tmp_path):
        for name in ("a", "b"):
            args = ["train", "--config", str(run_config), "--out", str(tmp_path / name)]
            assert main(args) == EXIT_OK
        first = (tmp_path / "a" / "metrics.jsonl").read_bytes()
        assert first == (tmp_path / "b" / "metrics.jsonl").read_bytes()
        assert (tmp_path / "a" / "best.pssm").read_bytes() == (
            tmp_path / "b" / "best.pssm"
        ).read_bytes()
        splits = [json.loads(line)["split"] for line in first.decode().splitlines()]
        assert splits == ["val", "val", "test"]

    def test_seed_flag_changes_run(self, run_config, tmp_path):
        for name, seed in (("a", "0"), ("b", "5")):
            args = ["train", "--config", str(run_config), "--seed", seed]
            assert main([*args, "--out", str(tmp_path / name)]) == EXIT_OK
        first = (tmp_path / "a" / "metrics.jsonl").read_bytes()
        assert first != (tmp_path / "b" / "metrics.jsonl").read_bytes()

    def test_eval_uses_recorded_data(self, trained, tmp_path, capsys):
        metrics = tmp_path / "eval.jsonl"
        args = ["eval", "--ckpt", str(trained), "--split", "val", "--metrics-out", str(metrics)]
        assert main(args) == EXIT_OK
        record = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert record["split"] == "val" and record["horizon"] == 8
        assert json.loads(metrics.read_text(encoding="utf-8"))["mse"] == record["mse"]

    def test_default_run_trains_in_float32(self, trained):
        arrays = read_header(trained)[0]["arrays"]
        assert {entry["dtype"] for entry in arrays} == {"float32"}

    def test_eval_missing_checkpoint(self, tmp_path):
        assert main(["eval", "--ckpt", str(tmp_path / "none.pssm")]) == EXIT_DATA

    def test_eval_corrupt_checkpoint(self, tmp_path):
        bad = tmp_path / "bad.pssm"
        bad.write_bytes(b"not a checkpoint at all")
        assert main(["eval", "--ckpt", str(bad)]) == EXIT_DATA

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_overflow_is_numeric_failure(self, run_config, tmp_path):
        start = pytz.UTC.localize(datetime(2021, 1, 1))
        rows = 400
        values = 1e160 * np.random.default_rng(0).normal(size=(rows, 2))
        table = SeriesTable(
            tuple(start + timedelta(hours=i) for i in range(rows)), values, ("a", "b")
        )
        csv_path = write_csv(table, tmp_path / "huge.csv")
        args = [
            "train",
            "--config",
            str(run_config),
            "--csv",
            str(csv_path),
            "--set",
            "data.normalize=false",
            "--set",
            "data.instance_norm=false",
            "--out",
            str(tmp_path / "huge"),
        ]
        assert main(args) == EXIT_NUMERIC


class TestModelCommands:
    def test_forecast_to_stdout(self, trained, tmp_path, capsys):
        data = tmp_path / "recent.csv"
        assert main(["synth", "--c", "3", "--t", "100", "--out", str(data)]) == EXIT_OK
        capsys.readouterr()
        assert main(["forecast", "--ckpt", str(trained), "--data", str(data)]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "date,x0,x1,x2"
        assert len(lines) == 1 + 8

    def test_forecast_channel_mismatch(self, trained, tmp_path):
        data = tmp_path / "recent.csv"
        assert main(["synth", "--c", "2", "--t", "100", "--out", str(data)]) == EXIT_OK
        assert main(["forecast", "--ckpt", str(trained), "--data", str(data)]) == EXIT_DATA

    def test_inspect_lcm(self, trained, capsys):
        assert main(["inspect", "--ckpt", str(trained), "--what", "lcm"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "channel,x0,x1,x2"
        assert len(lines) == 4

    def test_inspect_gates_to_file(self, trained, tmp_path):
        out = tmp_path / "gates.csv"
        args = ["inspect", "--ckpt", str(trained), "--what", "gates", "--windows", "4"]
        assert main([*args, "--out", str(out)]) == EXIT_OK
        assert out.read_text(encoding="utf-8").splitlines()[0] == "layer,channel,g_lcm,g_mopa"


class TestDiagnostics:
    def test_hippo_demo(self, tmp_path):
        out = tmp_path / "hippo.csv"
        assert main(["hippo-demo", "--n", "8", "--dt", "0.05", "--out", str(out)]) == EXIT_OK
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,u,u_hat,abs_err"
        assert len(lines) == 1 + 181

    def test_hippo_demo_unknown_signal(self):
        assert main(["hippo-demo", "--signal", "triangle"]) == EXIT_DATA

    def test_basis_check(self):
        assert main(["basis-check", "--channels", "3", "--max-deg", "2"]) == EXIT_OK

    def test_scan_bench(self, capsys):
        assert main(["scan-bench", "--lengths", "8,16", "--repeats", "1"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "L,impl,wall_ms,max_abs_diff_vs_seq"
        assert [line.split(",")[:2] for line in lines[1:]] == [
            ["8", "seq"],
            ["8", "par"],
            ["16", "seq"],
            ["16", "par"],
        ]

    def test_scan_bench_unknown_impl(self):
        assert main(["scan-bench", "--impls", "gpu"]) == EXIT_USAGE
