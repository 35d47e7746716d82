"""
Ejecución de experimentos en batch y agregación de resultados.

- run_batch: n ejecuciones independientes con semillas base_seed + i.
- aggregate_curves: media / desviación / IC 95% de best_curve por meta-episodio.
- replay_best: curvas de aprendizaje de configuraciones fijas (mejor, segunda, Soar).
- bandit_sweep: el mismo batch con cada política del bandit QO.
"""

import logging
import math
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.core.errors import ContractViolation, ExecutionError
from app.core.settings import settings
from app.models.agent import SOAR_DEFAULT, HyperParams
from app.models.acquisition import Direction
from app.models.bandit import PolicyKind
from app.models.experiment import CurvePoint, CurveStats, ExperimentConfig, Metric, OptimizerRun
from app.utils.gridworld import GridWorld, load_layout
from app.utils.optimizer import evaluate_metric, make_rng, run_execution
from app.utils.sarsa import run_episodes

logger = logging.getLogger(__name__)

# aproximación normal del IC 95% (sin t de Student)
Z_95 = 1.959963984540054

STREAM_REPLAY = 3

SWEEP_POLICIES: Tuple[Optional[PolicyKind], ...] = (
    None,
    PolicyKind.SOFTMAX,
    PolicyKind.EGREEDY,
    PolicyKind.GREEDY,
    PolicyKind.UCB1,
    PolicyKind.UCB1TUNED,
)


def _run_seeded(config: ExperimentConfig, seed: int) -> OptimizerRun:
    try:
        return run_execution(config, seed)
    except Exception as e:
        cause: BaseException = e
        try:
            pickle.dumps(e)
        except Exception:
            # la causa vuelve al proceso padre serializada
            cause = RuntimeError(f"{type(e).__name__}: {e}")
        raise ExecutionError(seed, cause) from e


def run_batch(config: ExperimentConfig, max_workers: Optional[int] = None) -> List[OptimizerRun]:
    """
    Corre `n_executions` ejecuciones con semillas base_seed + i.

    Con más de un worker usa un ProcessPoolExecutor; el resultado siempre se
    ordena por índice de ejecución. La primera falla aborta el batch.
    """
    seeds = [config.base_seed + i for i in range(config.n_executions)]
    workers = max_workers or settings.max_workers
    logger.info(
        f"🚀 Batch {config.algorithm.value}/{config.metric.value}: {len(seeds)} ejecuciones, "
        f"{config.episodes_bo} meta-episodios, {workers} worker(s)"
    )
    if workers <= 1 or len(seeds) == 1:
        return [_run_seeded(config, seed) for seed in seeds]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_seeded, config, seed) for seed in seeds]
        try:
            return [future.result() for future in futures]
        except ExecutionError as e:
            logger.error(f"❌ Ejecución con semilla {e.seed} falló: {e.cause}")
            for future in futures:
                future.cancel()
            raise


def aggregate_curves(runs: Sequence[OptimizerRun]) -> CurveStats:
    """Estadísticas de best_curve entre ejecuciones en cada índice de meta-episodio."""
    if not runs:
        raise ContractViolation("aggregate_curves requiere al menos una ejecución")
    lengths = {len(run.best_curve) for run in runs}
    if len(lengths) != 1:
        raise ContractViolation(f"las ejecuciones tienen longitudes distintas: {sorted(lengths)}")

    curves = np.asarray([run.best_curve for run in runs], dtype=np.float64)
    n_runs = curves.shape[0]
    mean = curves.mean(axis=0)
    std = curves.std(axis=0, ddof=1) if n_runs > 1 else np.zeros(curves.shape[1])
    half_width = Z_95 * std / math.sqrt(n_runs) if n_runs > 1 else np.zeros(curves.shape[1])
    changed = np.ones_like(curves, dtype=bool)
    changed[:, 1:] = curves[:, 1:] != curves[:, :-1]

    points = tuple(
        CurvePoint(
            meta_episode=t,
            mean=float(mean[t]),
            std=float(std[t]),
            ci_half_width=float(half_width[t]),
            min=float(curves[:, t].min()),
            max=float(curves[:, t].max()),
            improved=int(changed[:, t].sum()),
        )
        for t in range(curves.shape[1])
    )
    return CurveStats(n_runs=n_runs, points=points)


def best_thetas(runs: Sequence[OptimizerRun], top: int = 2) -> List[Tuple[str, HyperParams]]:
    """Las `top` mejores configuraciones observadas entre todas las ejecuciones."""
    if not runs:
        return []
    metric = runs[0].metric
    sign = -1.0 if metric.direction is Direction.MAXIMIZE else 1.0
    records = sorted(
        (record for run in runs for record in run.records),
        key=lambda r: sign * r.f_avg,
    )
    labels = ["best", "second_best"] + [f"rank_{i}" for i in range(3, top + 1)]
    return [(labels[i], records[i].theta) for i in range(min(top, len(records)))]


def best_thetas_from_frame(frame: pd.DataFrame, top: int = 2) -> List[Tuple[str, HyperParams]]:
    """Igual que best_thetas pero leyendo un runs.csv ya emitido."""
    if frame.empty:
        return []
    metric = Metric(frame["metric"].iloc[0])
    ascending = metric.direction is Direction.MINIMIZE
    ranked = frame.sort_values("f_avg", ascending=ascending, kind="mergesort").head(top)
    labels = ["best", "second_best"] + [f"rank_{i}" for i in range(3, top + 1)]
    return [
        (labels[i], HyperParams.from_vector(row[["alpha", "epsilon", "gamma", "lambda"]].to_numpy()))
        for i, (_, row) in enumerate(ranked.iterrows())
    ]


@dataclass
class ReplayResult:
    """Curvas de aprendizaje por episodio y resumen por configuración."""
    curves: pd.DataFrame
    summary: pd.DataFrame

    def metric_of(self, label: str) -> float:
        return float(self.summary.loc[self.summary["label"] == label, "metric_value"].iloc[0])


def replay_best(
    config: ExperimentConfig,
    candidates: Sequence[Tuple[str, HyperParams]],
    repetitions: int = 20,
    include_soar_default: bool = True,
    env: Optional[GridWorld] = None,
) -> ReplayResult:
    """
    Corre `repetitions` x `episodes_a` episodios con cada θ fijo (agente nuevo
    por repetición) y promedia por episodio recompensa, pasos y éxito.

    Todas las configuraciones usan los mismos generadores por repetición.
    """
    if repetitions < 1:
        raise ContractViolation(f"repetitions debe ser >= 1: {repetitions}")
    env = env or GridWorld(load_layout(config.layout_path or settings.layout_path or None))
    candidates = list(candidates)
    if include_soar_default and all(theta != SOAR_DEFAULT for _, theta in candidates):
        candidates.append(("soar_default", SOAR_DEFAULT))

    curve_rows = []
    summary_rows = []
    for label, theta in candidates:
        rewards = np.zeros(config.episodes_a)
        steps = np.zeros(config.episodes_a)
        successes = np.zeros(config.episodes_a)
        metric_values = []
        for repetition in range(repetitions):
            rng = make_rng(config.base_seed, STREAM_REPLAY, repetition)
            results = run_episodes(env, theta, config.episodes_a, config.cutoff, rng, config.agent_options)
            rewards += [r.reward for r in results]
            steps += [r.steps for r in results]
            successes += [r.success for r in results]
            metric_values.append(evaluate_metric(config.metric, results))
        alpha, epsilon, gamma, lambda_ = theta.as_vector()
        for episode in range(config.episodes_a):
            curve_rows.append({
                "label": label,
                "alpha": alpha, "epsilon": epsilon, "gamma": gamma, "lambda": lambda_,
                "episode": episode,
                "mean_reward": rewards[episode] / repetitions,
                "mean_steps": steps[episode] / repetitions,
                "success_rate": successes[episode] / repetitions,
            })
        summary_rows.append({
            "label": label,
            "alpha": alpha, "epsilon": epsilon, "gamma": gamma, "lambda": lambda_,
            "metric": config.metric.value,
            "metric_value": math.fsum(metric_values) / repetitions,
            "metric_std": float(np.std(metric_values, ddof=1)) if repetitions > 1 else 0.0,
            "repetitions": repetitions,
        })
        logger.info(f"📊 Replay {label} θ={theta.label()}: {config.metric.value}={summary_rows[-1]['metric_value']:.4f}")
    return ReplayResult(curves=pd.DataFrame(curve_rows), summary=pd.DataFrame(summary_rows))


@dataclass
class SweepResult:
    """`table` es determinista dada la semilla; `timing` guarda los tiempos por política."""
    table: pd.DataFrame
    timing: pd.DataFrame
    runs: Dict[str, List[OptimizerRun]] = field(default_factory=dict)


def _policy_config(config: ExperimentConfig, kind: Optional[PolicyKind]) -> ExperimentConfig:
    return config.model_copy(update={"bandit_policy": kind})


def bandit_sweep(
    config: ExperimentConfig,
    policies: Sequence[Optional[PolicyKind]] = SWEEP_POLICIES,
    max_workers: Optional[int] = None,
) -> SweepResult:
    """
    Corre el batch una vez por política (mismas semillas) y compara consultas
    promedio, reducción de consultas vs. sin bandit y el óptimo final. El tiempo
    promedio por política va aparte, en `timing`.
    """
    rows = []
    timing_rows = []
    all_runs: Dict[str, List[OptimizerRun]] = {}
    baseline_queries: Optional[float] = None
    for kind in policies:
        policy_config = _policy_config(config, kind)
        label = "none" if kind is None else policy_config.bandit.label
        runs = run_batch(policy_config, max_workers)
        all_runs[label] = runs
        queries = np.asarray([run.total_queries for run in runs], dtype=np.float64)
        finals = np.asarray([run.best_curve[-1] for run in runs], dtype=np.float64)
        avg_queries = float(queries.mean())
        if kind is None:
            baseline_queries = avg_queries
        rows.append({
            "policy": label,
            "avg_queries": avg_queries,
            "final_best_mean": float(finals.mean()),
            "final_best_std": float(finals.std(ddof=1)) if finals.size > 1 else 0.0,
            "n_executions": len(runs),
        })
        timing_rows.append({
            "policy": label,
            "avg_wall_time": float(np.mean([run.wall_time for run in runs])),
        })
    table = pd.DataFrame(rows)
    if baseline_queries is None:
        # sin fila "none": protocolo fijo de max_runs consultas por registro, LHS incluido
        baseline_queries = float((config.episodes_bo + config.init_lh) * config.max_runs)
    table.insert(2, "query_reduction_pct", (1.0 - table["avg_queries"] / baseline_queries) * 100.0)
    return SweepResult(table=table, timing=pd.DataFrame(timing_rows), runs=all_runs)
