"""Optimizer, metrics, run configuration, training, ablation and diagnostics."""

from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pytest
import pytz
import yaml

from library.adapters import SeriesTable
from library.errors import CheckpointError, ConfigError, DataError, NumericError
from library.model import Checkpoint, ForecastModel, ModelConfig, PatchConfig, load_checkpoint
from library.numerics import Graph, Parameter, backward, ops
from library.pipeline import (
    AblationRow,
    Adam,
    DataConfig,
    MetricsRecord,
    MetricsWriter,
    RunConfig,
    TrainConfig,
    ablate,
    basis_check,
    evaluate,
    forecast_table,
    inspect_model,
    load_run_config,
    mse_mae,
    parse_override,
    prepare_task,
    read_metrics,
    run_training,
    summarize,
    train,
    train_step,
    write_rows,
    write_summary,
)
from library.pipeline.report import metrics_table
from library.polyops import VARIANTS

PROJECT_ROOT = Path(__file__).resolve().parents[1]
LOOKBACK = 32
HORIZON = 8


def tiny_run(tmp_path=None, **train_overrides):
    raw = {
        "experiment_id": "tiny",
        "model": {
            "d_model": 8,
            "state_size": 4,
            "layers": 1,
            "d_inner": 8,
            "dropout": 0.1,
            "patch": {"patch_len": 8, "stride": 4, "lookback": LOOKBACK},
        },
        "data": {
            "synth": {"length": 600, "channels": 3, "seed": 1, "regime": "switching"},
            "lookback": LOOKBACK,
            "horizon": HORIZON,
        },
        "train": {
            "lr": 1e-3,
            "epochs": 2,
            "batch_size": 16,
            "max_batches_per_epoch": 3,
            **train_overrides,
        },
    }
    if tmp_path is not None:
        raw["output"] = {"dir": str(tmp_path / "run")}
    return RunConfig.model_validate(raw)


@pytest.fixture(scope="module")
def task():
    return prepare_task(tiny_run().data)


def fresh_model(run, task, variant=None):
    config = run.model_for(task.table.n_channels)
    if variant is not None:
        config = config.model_copy(update={"variant": variant})
    return ForecastModel.init(config, seed=run.train.seed, dtype=run.train.precision)


class TestAdam:
    def _quadratic_grad(self, param, target):
        with Graph() as graph:
            diff = param - target
            loss = ops.sum(diff * diff)
        backward(graph, loss)
        return loss.item()

    def test_zero_lr_leaves_parameters(self):
        param = Parameter(np.array([1.0, -2.0]), "p")
        optimizer = Adam([param], lr=0.0)
        for _ in range(3):
            optimizer.zero_grad()
            self._quadratic_grad(param, 5.0)
            optimizer.step()
        np.testing.assert_array_equal(param.data, [1.0, -2.0])
        assert optimizer.steps == 3

    def test_descends_quadratic(self):
        param = Parameter(np.zeros(4), "p")
        optimizer = Adam([param], lr=0.1)
        first = None
        for _ in range(500):
            optimizer.zero_grad()
            loss = self._quadratic_grad(param, 3.0)
            first = loss if first is None else first
            optimizer.step()
        assert np.max(np.abs(param.data - 3.0)) < 0.2
        assert self._quadratic_grad(param, 3.0) < 0.01 * first

    def test_first_step_moves_by_lr(self):
        param = Parameter(np.array([0.0]), "p")
        optimizer = Adam([param], lr=0.05)
        self._quadratic_grad(param, 1.0)
        optimizer.step()
        np.testing.assert_allclose(param.data, [0.05], rtol=1e-6)

    def test_weight_decay_shrinks(self):
        param = Parameter(np.array([2.0, -4.0]), "p")
        optimizer = Adam([param], lr=0.1, weight_decay=0.5)
        optimizer.step()
        np.testing.assert_allclose(param.data, [1.9, -3.8])

    def test_negative_lr(self):
        with pytest.raises(ValueError):
            Adam([], lr=-1.0)


class TestMetrics:
    def test_exact_and_unit_error(self):
        target = np.zeros((2, 3, 4))
        assert mse_mae(target, target) == (0.0, 0.0)
        assert mse_mae(np.ones_like(target), target) == (1.0, 1.0)

    def test_mixed_errors(self):
        mse, mae = mse_mae(np.array([1.0, -3.0]), np.zeros(2))
        assert mse == pytest.approx(5.0)
        assert mae == pytest.approx(2.0)

    def test_matches_double_loop(self):
        rng = np.random.default_rng(0)
        prediction, target = rng.normal(size=(6, 3, 5)), rng.normal(size=(6, 3, 5))
        sq = ab = 0.0
        for w in range(6):
            for c in range(3):
                for s in range(5):
                    err = prediction[w, c, s] - target[w, c, s]
                    sq += err * err
                    ab += abs(err)
        mse, mae = mse_mae(prediction, target)
        assert abs(mse - sq / 90) <= 1e-7
        assert abs(mae - ab / 90) <= 1e-7

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse_mae(np.zeros(3), np.zeros(4))

    def test_empty(self):
        with pytest.raises(DataError):
            mse_mae(np.zeros((0, 2)), np.zeros((0, 2)))

    def test_writer_round_trip(self, tmp_path):
        writer = MetricsWriter(tmp_path / "m" / "metrics.jsonl")
        writer.write(MetricsRecord(split="val", horizon=8, mse=0.5, mae=0.25, epoch=1))
        writer.write(MetricsRecord(split="test", horizon=8, mse=0.4, mae=0.2))
        records = read_metrics(writer.path)
        assert records[0] == {"split": "val", "horizon": 8, "mse": 0.5, "mae": 0.25, "epoch": 1}
        assert "epoch" not in records[1]

    def test_evaluate_counts_every_window(self, task):
        run = tiny_run()
        model = fresh_model(run, task)
        record = evaluate(model, task, "test", batch_size=7)
        whole = evaluate(model, task, "test", batch_size=1000)
        assert record.horizon == HORIZON
        assert record.variant == "full"
        assert record.mse == pytest.approx(whole.mse, rel=1e-6)

    def test_zero_prediction_on_normalized_train_targets(self, task):
        windows = task.split("train")
        _, y = windows.stack(range(len(windows)))
        mse, _ = mse_mae(np.zeros_like(y), y)
        assert mse == pytest.approx(1.0, abs=0.15)

    def test_zero_head_predicts_window_mean(self, task):
        run = tiny_run()
        model = fresh_model(run, task)
        model.head_w.assign(np.zeros(model.head_w.shape))
        x, y = task.split("test").stack(range(len(task.split("test"))))
        record = evaluate(model, task, "test")
        expected = mse_mae(np.broadcast_to(x.mean(axis=-1, keepdims=True), y.shape), y)
        assert record.mse == pytest.approx(expected[0], rel=1e-5)


class TestRunConfig:
    def test_parse_override(self):
        assert parse_override("train.lr=0.001") == ("train.lr", 0.001)
        assert parse_override("model.variant=vanilla") == ("model.variant", "vanilla")
        assert parse_override("data.csv=") == ("data.csv", None)

    def test_malformed_override(self):
        with pytest.raises(ConfigError):
            parse_override("train.lr")

    def test_defaults_use_synthetic_data(self):
        run = load_run_config()
        assert run.data.synth is not None
        assert run.train.lr == 1e-4
        assert run.data.source_label == "synth_switching"

    def test_default_precision_trains_float32(self):
        run = load_run_config()
        assert run.train.precision == "float32"
        model = ForecastModel.init(run.model_for(3), seed=0, dtype=run.train.precision)
        assert all(p.dtype == np.float32 for p in model.parameters())
        assert ForecastModel.init(run.model_for(3)).dtype == np.float32

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            yaml.safe_dump({"experiment_id": "My Run!", "data": {"lookback": 48}}),
            encoding="utf-8",
        )
        run = load_run_config(path, {"train.lr": "1e-3", "model.variant": "no_mopa"})
        assert run.experiment_id == "my_run_"
        assert run.train.lr == pytest.approx(1e-3)
        assert run.model.variant == "no_mopa"
        assert run.data.lookback == 48
        assert run.data.synth is not None

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("train:\n  learning_rate: 0.1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="learning_rate"):
            load_run_config(path)

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            load_run_config(overrides={"train.lr": 0})

    def test_two_sources(self):
        with pytest.raises(ConfigError, match="exactly one"):
            load_run_config(overrides={"data.csv": "a.csv", "data.dataset": "ETTh1"})

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run_config(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("train: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_run_config(path)

    def test_model_takes_data_fields(self):
        config = tiny_run().model_for(5)
        assert config.channels == 5
        assert config.horizon == HORIZON
        assert config.lookback == LOOKBACK
        assert config.tokens == 7

    def test_patch_longer_than_lookback(self):
        run = tiny_run()
        run.data.lookback = 4
        with pytest.raises(ConfigError, match="does not fit"):
            run.model_for(3)


class TestTraining:
    def test_seeded_runs_are_identical(self, task):
        results = []
        for _ in range(2):
            run = tiny_run()
            model = fresh_model(run, task)
            results.append((train(model, task, run.train), model.state_dict()))
        (first, state_a), (second, state_b) = results
        assert [r.model_dump() for r in first.history] == [r.model_dump() for r in second.history]
        for name in state_a:
            np.testing.assert_array_equal(state_a[name], state_b[name])

    def test_history_and_best_epoch(self, task):
        run = tiny_run()
        result = train(fresh_model(run, task), task, run.train)
        assert [r.epoch for r in result.history] == [1, 2]
        assert result.steps == 6
        assert result.best_val_mse == min(r.mse for r in result.history)
        assert all(r.train_loss is not None and r.seed == 0 for r in result.history)

    def test_nan_input_raises(self, task):
        run = tiny_run()
        model = fresh_model(run, task)
        x, y = task.split("train").stack([0, 1])
        x[0, 0, 5] = np.nan
        optimizer = Adam(model.parameters(), lr=1e-3)
        with pytest.raises(NumericError, match="step 4"):
            train_step(model, optimizer, x, y, run.train, np.random.default_rng(0), 4)

    def test_float32_training(self, task):
        run = tiny_run(precision="float32", epochs=1)
        model = ForecastModel.init(run.model_for(3), seed=0, dtype="float32")
        train(model, task, run.train)
        assert model.dtype == np.float32

    def test_run_training_writes_outputs(self, tmp_path):
        run = tiny_run(tmp_path)
        result = run_training(run)
        out = tmp_path / "run"
        records = read_metrics(out / "metrics.jsonl")
        assert [r["split"] for r in records] == ["val", "val", "test"]
        assert (out / "run_config.yaml").exists()
        loaded = load_checkpoint(out / "best.pssm")
        assert loaded.metadata["epoch"] == result.best_epoch
        assert loaded.metadata["channel_names"] == ["x0", "x1", "x2"]
        assert len(loaded.metadata["normalization"]["mean"]) == 3
        assert result.test is not None and result.test.split == "test"


class TestAblation:
    def test_five_rows_per_horizon(self, tmp_path):
        run = tiny_run(epochs=1, max_batches_per_epoch=1)
        rows = ablate(run, seeds=[0], horizons=[4, 8])
        assert len(rows) == 10
        assert [r.variant for r in rows[:5]] == list(VARIANTS)
        assert {r.horizon for r in rows[5:]} == {8}
        summary = summarize(rows)
        assert len(summary) == 10 and all(s.seeds == 1 and s.mse_std == 0.0 for s in summary)
        rows_csv = write_rows(rows, tmp_path / "rows.csv").read_text(encoding="utf-8")
        assert rows_csv.splitlines()[0] == "variant,horizon,seed,mse,mae"
        header = write_summary(summary, tmp_path / "summary.csv").read_text(encoding="utf-8")
        assert header.startswith("variant,horizon,seeds,mse_mean")

    def test_seed_average(self):
        rows = [AblationRow("full", 8, s, mse, 0.5) for s, mse in enumerate([1.0, 3.0])]
        (summary,) = summarize(rows)
        assert summary.mse_mean == 2.0 and summary.mse_std == 1.0

    def test_unknown_variant(self):
        with pytest.raises(ValueError, match="unknown variants"):
            ablate(tiny_run(), seeds=[0], variants=["full", "poly"])


class TestInspect:
    def _model(self, variant="full", layers=2):
        config = ModelConfig(
            channels=3,
            d_model=8,
            state_size=5,
            layers=layers,
            d_inner=8,
            horizon=4,
            variant=variant,
            patch=PatchConfig(patch_len=8, stride=4, lookback=16),
        )
        return ForecastModel.init(config, seed=0, dtype="float64")

    def _windows(self):
        return np.random.default_rng(0).normal(size=(4, 3, 16))

    def test_lcm_is_identity_at_start(self):
        table = inspect_model(self._model(), "lcm", ["a", "b", "c"])
        assert table.columns == ["channel", "a", "b", "c"]
        np.testing.assert_allclose([row[1:] for row in table.rows], np.eye(3))

    def test_mopa_columns_are_high_orders(self):
        table = inspect_model(self._model(), "mopa")
        assert table.columns == ["channel", "order_2", "order_3", "order_4"]
        assert table.to_csv().splitlines()[1] == "x0,1,1,1"

    def test_gate_only_mopa_covers_every_order(self):
        table = inspect_model(self._model("gate_only"), "mopa")
        assert table.columns[1] == "order_0"

    def test_gates_start_balanced(self):
        table = inspect_model(self._model(), "gates", windows=self._windows())
        assert len(table.rows) == 2 * 3
        for _, _, g_lcm, g_mopa in table.rows:
            assert g_lcm == pytest.approx(0.5) and g_mopa == pytest.approx(0.5)

    def test_states_rows(self):
        table = inspect_model(self._model(layers=1), "states", windows=self._windows())
        assert len(table.rows) == 3 * 3
        layer, channel, order, pre, post = table.rows[0]
        assert (layer, channel, order) == (0, "x0", "order_2")
        assert post == pytest.approx(pre)

    def test_variant_without_component(self):
        with pytest.raises(ConfigError, match="no channel-mixing"):
            inspect_model(self._model("vanilla"), "lcm")
        with pytest.raises(ConfigError, match="no gate"):
            inspect_model(self._model("no_lcm"), "gates", windows=self._windows())

    def test_gates_need_windows(self):
        with pytest.raises(ConfigError, match="needs input windows"):
            inspect_model(self._model(), "gates")


class TestForecast:
    def _checkpoint(self, channel_names=("a", "b")):
        config = ModelConfig(
            channels=2,
            d_model=4,
            state_size=3,
            layers=1,
            d_inner=4,
            horizon=5,
            instance_norm=False,
            patch=PatchConfig(patch_len=4, stride=4, lookback=8),
        )
        model = ForecastModel.init(config, seed=0, dtype="float64")
        model.head_w.assign(np.zeros(model.head_w.shape))
        metadata = {
            "normalization": {"mean": [10.0, -2.0], "std": [2.0, 0.5]},
            "normalized": True,
            "channel_names": list(channel_names),
        }
        return Checkpoint(model=model, metadata=metadata)

    def _table(self, rows=12, names=("a", "b")):
        start = pytz.UTC.localize(datetime(2021, 3, 1))
        stamps = tuple(start + timedelta(minutes=15 * i) for i in range(rows))
        values = np.random.default_rng(1).normal(size=(rows, len(names)))
        return SeriesTable(stamps, values, tuple(names))

    def test_zero_head_returns_train_mean(self):
        table = self._table()
        out = forecast_table(self._checkpoint(), table)
        assert out.n_rows == 5
        np.testing.assert_allclose(out.values, np.tile([10.0, -2.0], (5, 1)))
        assert out.timestamps[0] - table.timestamps[-1] == timedelta(minutes=15)
        assert out.channel_names == ("a", "b")

    def test_channel_mismatch(self):
        with pytest.raises(DataError, match="do not match"):
            forecast_table(self._checkpoint(), self._table(names=("a", "c")))

    def test_too_few_rows(self):
        with pytest.raises(DataError, match="at least 8 rows"):
            forecast_table(self._checkpoint(), self._table(rows=6))

    def test_missing_statistics(self):
        checkpoint = self._checkpoint()
        checkpoint.metadata.pop("normalization")
        with pytest.raises(CheckpointError):
            forecast_table(checkpoint, self._table())


class TestDemosAndReport:
    @pytest.mark.parametrize("channels,max_deg", [(1, 4), (2, 3), (3, 2)])
    def test_basis_check_passes(self, channels, max_deg):
        check = basis_check(channels, max_deg)
        assert check.ok
        assert check.counts_match

    def test_basis_check_totals(self):
        assert basis_check(2, 3).count_total == 20

    def test_metrics_table_rows(self):
        records = [MetricsRecord(split="test", horizon=96, mse=0.4, mae=0.3, variant="full")]
        assert metrics_table(records).row_count == 1

    def test_csv_task(self):
        sample = PROJECT_ROOT / "data" / "sample-csv" / "sample.csv"
        data = DataConfig(csv=str(sample), lookback=LOOKBACK, horizon=HORIZON)
        task = prepare_task(data)
        assert task.table.channel_names == ("load", "temp", "OT")
        assert len(task.split("train")) == 504 - LOOKBACK - HORIZON + 1
        assert isinstance(task.split("val")[0].x, np.ndarray)

    def test_train_config_bounds(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
