import pandas as pd
import pytest
from click.testing import CliRunner

from app.cli import cli
from app.utils.artifacts import read_manifest

SMALL = [
    "--set", "episodes_bo=3", "--set", "episodes_a=4", "--set", "cutoff=60",
    "--set", "n_executions=2", "--set", "acq_n_random_starts=200",
    "--set", "acq_n_local_refine=1", "--set", "acq_refine_iterations=12",
]


@pytest.fixture
def runner():
    return CliRunner()


def test_validate_config_prints_effective_values(runner, tmp_path):
    path = tmp_path / "experiment.env"
    path.write_text("metric=steps_per_episode\n", encoding="utf-8")
    result = runner.invoke(cli, ["validate-config", "--config", str(path), "--set", "episodes_bo=7"])
    assert result.exit_code == 0, result.output
    assert "metric=steps_per_episode" in result.output
    assert "episodes_bo=7" in result.output
    assert "config_hash=" in result.output


def test_invalid_config_exits_non_zero(runner):
    result = runner.invoke(cli, ["validate-config", "--set", "min_runs=6", "--set", "max_runs=5"])
    assert result.exit_code != 0
    assert "min_runs" in result.output


def test_optimize_writes_artifacts(runner, tmp_path):
    out = tmp_path / "bo"
    result = runner.invoke(cli, ["optimize", *SMALL, "--seed", "4", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    runs = pd.read_csv(out / "runs.csv")
    assert len(runs) == 2 * 3
    assert set(runs["seed"]) == {4, 5}
    assert set(runs["phase"]) == {"bo"}
    curves = pd.read_csv(out / "curves.csv")
    assert list(curves["meta_episode"]) == [0, 1, 2]
    manifest = read_manifest(out)
    assert manifest["meta"]["command"] == "optimize"
    assert manifest["config"]["base_seed"] == "4"
    assert "stalled_meta_episodes" in manifest["meta"]


def test_reproduce_gives_identical_csvs(runner, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert runner.invoke(cli, ["random-search", *SMALL, "--out-dir", str(first)]).exit_code == 0
    result = runner.invoke(cli, ["reproduce", str(first), "--out-dir", str(second)])
    assert result.exit_code == 0, result.output
    for name in ("runs.csv", "curves.csv"):
        assert (first / name).read_text() == (second / name).read_text()


def test_replay_best_from_runs(runner, tmp_path):
    bo = tmp_path / "bo"
    assert runner.invoke(cli, ["optimize", *SMALL, "--out-dir", str(bo)]).exit_code == 0
    out = tmp_path / "replay"
    result = runner.invoke(cli, ["replay-best", *SMALL, "--runs", str(bo), "--repetitions", "2", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    summary = pd.read_csv(out / "replay_summary.csv")
    assert list(summary["label"]) == ["best", "second_best", "soar_default"]
    assert len(pd.read_csv(out / "replay.csv")) == 3 * 4


def test_bandit_sweep(runner, tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(cli, ["bandit-sweep", *SMALL, "--set", "n_executions=1", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out / "sweep.csv")
    assert table.loc[0, "policy"] == "none"
    assert table.loc[0, "query_reduction_pct"] == 0.0
    assert "avg_wall_time" not in table.columns
    assert (out / "sweep_timing.csv").is_file()

    again = tmp_path / "sweep-again"
    result = runner.invoke(cli, ["bandit-sweep", *SMALL, "--set", "n_executions=1", "--out-dir", str(again)])
    assert result.exit_code == 0, result.output
    assert (again / "sweep.csv").read_bytes() == (out / "sweep.csv").read_bytes()


def test_missing_layout_is_reported(runner, tmp_path):
    result = runner.invoke(cli, ["optimize", *SMALL, "--layout", str(tmp_path / "missing.txt"),
                                 "--out-dir", str(tmp_path / "out")])
    assert result.exit_code != 0
    assert "layout" in result.output
