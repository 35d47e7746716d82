import math
import pickle

import numpy as np
import pandas as pd
import pytest

from app.core.config import build_config
from app.core.errors import (
    ConfigError,
    ContractViolation,
    ExecutionError,
    LayoutError,
    NotPositiveDefiniteError,
)
from app.models.agent import (
    REFERENCE_BEST_STEPS,
    REFERENCE_BEST_SUCCESS,
    REFERENCE_SECOND_SUCCESS,
    REFERENCE_SECOND_STEPS,
    SOAR_DEFAULT,
    HyperParams,
)
from app.models.bandit import PolicyKind
from app.models.experiment import Algorithm, Metric, OptimizerRun
from app.utils import artifacts, harness
from app.utils.harness import (
    aggregate_curves,
    bandit_sweep,
    best_thetas,
    best_thetas_from_frame,
    replay_best,
    run_batch,
)
from app.utils.optimizer import run_optimizer


def constant_run(value: float, length: int = 4, seed: int = 0) -> OptimizerRun:
    """Ejecución sintética con f_avg constante."""
    from app.models.experiment import MetaEpisodeRecord, Phase

    records = tuple(
        MetaEpisodeRecord(index=i, phase=Phase.BO, theta=SOAR_DEFAULT, query_values=(value,),
                          f_avg=value, episodes_per_query=1)
        for i in range(length)
    )
    return OptimizerRun(algorithm=Algorithm.BO, metric=Metric.SUCCESS_RATE, seed=seed,
                        records=records, best_curve=(value,) * length)


class TestRunBatch:

    def test_runs_are_ordered_by_seed(self, small_values):
        config = build_config({**small_values, "base_seed": "7"})
        runs = run_batch(config, max_workers=1)
        assert [run.seed for run in runs] == [7, 8]
        assert all(len(run.records) == 3 for run in runs)

    def test_single_execution_equals_run_optimizer(self, small_values):
        config = build_config({**small_values, "n_executions": "1"})
        (run,) = run_batch(config, max_workers=1)
        assert run.records == run_optimizer(config, seed=0).records

    def test_failure_names_the_seed(self, small_config, monkeypatch):
        def broken(config, seed):
            if seed == 1:
                raise RuntimeError("boom")
            return constant_run(0.5, seed=seed)

        monkeypatch.setattr(harness, "run_execution", broken)
        with pytest.raises(ExecutionError) as info:
            run_batch(small_config, max_workers=1)
        assert info.value.seed == 1

    def test_process_pool_matches_serial(self, small_values):
        config = build_config({**small_values, "n_executions": "3", "base_seed": "4"})
        serial = run_batch(config, max_workers=1)
        parallel = run_batch(config, max_workers=2)
        assert [run.seed for run in parallel] == [4, 5, 6]
        for a, b in zip(serial, parallel):
            assert a.records == b.records
            assert a.best_curve == b.best_curve

    def test_process_pool_failure_names_the_seed(self, small_values, tmp_path):
        config = build_config({**small_values, "base_seed": "3", "layout_path": str(tmp_path / "missing.txt")})
        with pytest.raises(ExecutionError) as info:
            run_batch(config, max_workers=2)
        assert info.value.seed == 3
        assert isinstance(info.value.cause, LayoutError)


@pytest.mark.parametrize("error", [
    ExecutionError(7, RuntimeError("boom")),
    NotPositiveDefiniteError(1e-5),
    ConfigError("fuera de rango", ["bandit_epsilon"]),
])
def test_errors_survive_pickling(error):
    restored = pickle.loads(pickle.dumps(error))
    assert type(restored) is type(error)
    assert str(restored) == str(error)
    assert vars(restored).keys() == vars(error).keys()
    if isinstance(error, ExecutionError):
        assert restored.seed == 7 and str(restored.cause) == "boom"
    if isinstance(error, NotPositiveDefiniteError):
        assert restored.jitter == 1e-5
    if isinstance(error, ConfigError):
        assert restored.keys == ["bandit_epsilon"]


class TestAggregateCurves:

    def test_single_run(self):
        stats = aggregate_curves([constant_run(0.3)])
        assert [p.mean for p in stats.points] == [0.3] * 4
        assert all(p.std == 0.0 and p.ci_half_width == 0.0 for p in stats.points)

    def test_two_constant_curves(self):
        stats = aggregate_curves([constant_run(0.4), constant_run(0.6)])
        for point in stats.points:
            assert point.mean == pytest.approx(0.5)
            assert point.std == pytest.approx(math.sqrt(0.02), abs=1e-12)
            assert point.ci_half_width == pytest.approx(1.959963984540054 * point.std / math.sqrt(2))
            assert (point.min, point.max) == (0.4, 0.6)
        assert stats.stalled_meta_episodes == 3

    def test_ragged_runs_rejected(self):
        with pytest.raises(ContractViolation):
            aggregate_curves([constant_run(0.4, 3), constant_run(0.6, 4)])

    def test_monotone_mean_and_improvements(self, small_config):
        stats = aggregate_curves(run_batch(small_config, max_workers=1))
        means = [p.mean for p in stats.points]
        assert means == sorted(means)
        assert stats.points[0].improved == stats.n_runs


class TestReplay:

    def test_soar_default_is_added(self, small_config):
        theta = HyperParams.from_vector((0.5, 0.2, 0.7, 0.6))
        result = replay_best(small_config, [("best", theta)], repetitions=2)
        assert list(result.summary["label"]) == ["best", "soar_default"]
        soar = result.curves[result.curves["label"] == "soar_default"]
        assert soar[["alpha", "epsilon", "gamma", "lambda"]].iloc[0].tolist() == [0.3, 0.1, 0.9, 0.001]
        assert len(soar) == small_config.episodes_a

    def test_single_repetition_is_one_query(self, small_config, default_env):
        from app.utils.optimizer import make_rng
        from app.utils.sarsa import run_episodes

        result = replay_best(small_config, [("soar", SOAR_DEFAULT)], repetitions=1)
        expected = run_episodes(default_env, SOAR_DEFAULT, small_config.episodes_a, small_config.cutoff,
                                make_rng(small_config.base_seed, harness.STREAM_REPLAY, 0))
        assert result.curves["mean_steps"].tolist() == [float(r.steps) for r in expected]

    def test_invalid_repetitions(self, small_config):
        with pytest.raises(ContractViolation):
            replay_best(small_config, [], repetitions=0)


class TestBestThetas:

    def test_from_runs_and_from_frame_agree(self, small_config):
        runs = run_batch(small_config, max_workers=1)
        ranked = best_thetas(runs)
        assert [label for label, _ in ranked] == ["best", "second_best"]
        frame = artifacts.runs_frame(runs)
        from_frame = best_thetas_from_frame(frame)
        for (_, a), (_, b) in zip(ranked, from_frame):
            np.testing.assert_allclose(a.as_vector(), b.as_vector())

    def test_minimize_ranks_ascending(self):
        frame = pd.DataFrame({
            "metric": ["steps_per_episode"] * 3,
            "alpha": [0.1, 0.2, 0.3], "epsilon": [0.1] * 3, "gamma": [0.9] * 3, "lambda": [0.5] * 3,
            "f_avg": [250.0, 180.0, 300.0],
        })
        ranked = best_thetas_from_frame(frame)
        assert [theta.alpha for _, theta in ranked] == [0.2, 0.1]


class TestBanditSweep:

    def test_table_columns_and_reduction(self, small_config):
        sweep = bandit_sweep(small_config, max_workers=1)
        table = sweep.table
        assert list(table["policy"]) == ["none", "softmax(tau=1)", "egreedy(epsilon=0.2)", "greedy", "ucb1", "ucb1tuned"]
        none_queries = float(table.loc[0, "avg_queries"])
        assert none_queries == small_config.episodes_bo * small_config.max_runs
        lo = small_config.episodes_bo * small_config.min_runs
        assert table["avg_queries"].between(lo, none_queries).all()
        recomputed = (1.0 - table["avg_queries"] / none_queries) * 100.0
        np.testing.assert_allclose(table["query_reduction_pct"], recomputed)
        assert "avg_wall_time" not in table.columns
        assert list(sweep.timing.columns) == ["policy", "avg_wall_time"]
        assert list(sweep.timing["policy"]) == list(table["policy"])

    def test_fixed_protocol_baseline_counts_the_initial_design(self, small_values):
        config = build_config({**small_values, "init_lh": "2"})
        sweep = bandit_sweep(config, policies=[PolicyKind.GREEDY], max_workers=1)
        baseline = (config.episodes_bo + config.init_lh) * config.max_runs
        expected = (1.0 - sweep.table.loc[0, "avg_queries"] / baseline) * 100.0
        assert sweep.table.loc[0, "query_reduction_pct"] == pytest.approx(expected)


@pytest.mark.slow
class TestExperimentTrends:
    """Tendencias a escala de escritorio; tardan varios minutos."""

    def trend_values(self, metric: str):
        return {
            "metric": metric, "episodes_bo": "15", "episodes_a": "30", "n_executions": "5",
            "acq_n_random_starts": "2000",
        }

    def test_bandits_reduce_queries(self):
        table = bandit_sweep(build_config(self.trend_values("success_rate"))).table.set_index("policy")
        for policy in ("softmax(tau=1)", "egreedy(epsilon=0.2)", "greedy"):
            assert table.loc[policy, "query_reduction_pct"] >= 10.0
        for policy in ("ucb1", "ucb1tuned"):
            assert table.loc[policy, "query_reduction_pct"] >= 5.0

    def test_bo_improves_success_rate(self):
        stats = aggregate_curves(run_batch(build_config(self.trend_values("success_rate"))))
        assert stats.points[-1].mean >= 1.15 * stats.points[0].mean

    def test_bo_improves_steps(self):
        stats = aggregate_curves(run_batch(build_config(self.trend_values("steps_per_episode"))))
        assert stats.points[-1].mean <= 0.92 * stats.points[0].mean

    def test_bo_at_least_matches_random_search(self):
        values = {**self.trend_values("success_rate"), "n_executions": "10"}
        bo = run_batch(build_config(values))
        rs = run_batch(build_config({**values, "algorithm": "random_search"}))
        wins = sum(b.best_curve[-1] >= r.best_curve[-1] for b, r in zip(bo, rs))
        assert wins >= 6

    def test_best_theta_beats_soar_default(self):
        config = build_config(self.trend_values("success_rate"))
        (label, theta), *_ = best_thetas(run_batch(config))
        replay = replay_best(build_config({**self.trend_values("success_rate"), "episodes_a": "50"}),
                             [(label, theta)], repetitions=20)
        assert replay.metric_of("best") > replay.metric_of("soar_default")

    def test_reported_thetas_beat_soar_default(self):
        config = build_config({**self.trend_values("success_rate"), "episodes_a": "50"})
        replay = replay_best(
            config,
            [("best", REFERENCE_BEST_SUCCESS), ("second_best", REFERENCE_SECOND_SUCCESS)],
            repetitions=20,
        )
        assert replay.metric_of("best") > replay.metric_of("soar_default")
        assert replay.metric_of("second_best") > replay.metric_of("soar_default")

    def test_reported_steps_theta_beats_soar_default(self):
        config = build_config({**self.trend_values("steps_per_episode"), "episodes_a": "50"})
        replay = replay_best(
            config, [("best", REFERENCE_BEST_STEPS), ("second_best", REFERENCE_SECOND_STEPS)], repetitions=20
        )
        assert replay.metric_of("best") < replay.metric_of("soar_default")
