"""
Endpoints de experimentos: validación de configuración, batches de BO o de
búsqueda aleatoria y replays de configuraciones fijas.

Los cálculos son CPU-bound; los endpoints son síncronos para que FastAPI
los corra en su threadpool.
"""

import logging
from typing import List

from fastapi import APIRouter

from app.core.config import build_config
from app.models.api import (
    BatchResponse,
    ConfigRequest,
    ConfigResponse,
    ReplayEntry,
    ReplayRequest,
    ReplayResponse,
    RunSummary,
)
from app.models.agent import HyperParams
from app.models.experiment import Algorithm, ExperimentConfig, OptimizerRun
from app.utils.harness import aggregate_curves, replay_best, run_batch

logger = logging.getLogger(__name__)

router = APIRouter()


def _summarize(run: OptimizerRun) -> RunSummary:
    best = run.best_record
    second = run.second_best_record
    return RunSummary(
        seed=run.seed,
        total_queries=run.total_queries,
        wall_time=run.wall_time,
        best_theta=best.theta,
        best_value=best.f_avg,
        second_best_theta=second.theta if second else None,
        second_best_value=second.f_avg if second else None,
        best_curve=list(run.best_curve),
        records=list(run.records),
    )


def _batch(config: ExperimentConfig) -> BatchResponse:
    runs: List[OptimizerRun] = run_batch(config)
    stats = aggregate_curves(runs)
    return BatchResponse(
        algorithm=config.algorithm.value,
        metric=config.metric.value,
        config_hash=config.config_hash(),
        runs=[_summarize(run) for run in runs],
        curve=list(stats.points),
        stalled_meta_episodes=stats.stalled_meta_episodes,
    )


@router.post("/config/validate", response_model=ConfigResponse, tags=["Experiments"])
def validate_config(request: ConfigRequest):
    """Valida las claves y devuelve la configuración efectiva con defaults."""
    config = build_config(request.values)
    return ConfigResponse(config=config.to_key_values(), config_hash=config.config_hash())


@router.post("/optimize", response_model=BatchResponse, tags=["Experiments"])
def optimize(request: ConfigRequest):
    """Corre un batch de optimización bayesiana."""
    config = build_config({**request.values, "algorithm": Algorithm.BO.value})
    logger.info(f"🚀 /optimize config_hash={config.config_hash()}")
    return _batch(config)


@router.post("/random-search", response_model=BatchResponse, tags=["Experiments"])
def random_search(request: ConfigRequest):
    """Corre un batch de búsqueda aleatoria con el mismo protocolo."""
    config = build_config({**request.values, "algorithm": Algorithm.RANDOM_SEARCH.value})
    logger.info(f"🚀 /random-search config_hash={config.config_hash()}")
    return _batch(config)


@router.post("/replay", response_model=ReplayResponse, tags=["Experiments"])
def replay(request: ReplayRequest):
    """Curvas de aprendizaje de θ fijos (más la configuración por defecto de Soar)."""
    config = build_config(request.values)
    result = replay_best(
        config,
        list(request.thetas.items()),
        request.repetitions,
        include_soar_default=request.include_soar_default,
    )
    entries = []
    for _, row in result.summary.iterrows():
        curve = result.curves[result.curves["label"] == row["label"]]
        entries.append(ReplayEntry(
            label=row["label"],
            theta=HyperParams.from_vector(row[["alpha", "epsilon", "gamma", "lambda"]].to_numpy()),
            metric_value=float(row["metric_value"]),
            metric_std=float(row["metric_std"]),
            mean_steps=curve["mean_steps"].astype(float).tolist(),
            success_rate=curve["success_rate"].astype(float).tolist(),
        ))
    return ReplayResponse(metric=config.metric.value, repetitions=request.repetitions, entries=entries)
