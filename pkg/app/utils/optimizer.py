"""
Orquestador: bucle de meta-episodios de la optimización bayesiana sobre θ.

Cada meta-episodio propone un θ (EI sobre el GP, o uniforme en la búsqueda
aleatoria), lo evalúa con una o más consultas de `episodes_a` episodios del
agente (el bandit QO decide cuántas) y agrega el promedio al dataset del GP.
"""

import logging
import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ContractViolation
from app.core.settings import settings
from app.models.acquisition import Direction
from app.models.agent import AgentOptions, EpisodeResult, HyperParams
from app.models.bandit import BanditPolicy, QOState
from app.models.experiment import (
    Algorithm,
    ExperimentConfig,
    MetaEpisodeRecord,
    Metric,
    OptimizerRun,
    Phase,
)
from app.models.gp import GPDataset
from app.utils.bayes_opt import latin_hypercube, propose_next
from app.utils.gaussian_process import fit, read_dataset_csv
from app.utils.gridworld import GridWorld, load_layout
from app.utils.query_bandit import decide_if_next_query
from app.utils.sarsa import run_episodes

logger = logging.getLogger(__name__)

THETA_DIM = 4
STD_FLOOR = 1e-9

# flujos independientes del SeedSequence de cada ejecución
STREAM_LHS = 0
STREAM_PROPOSAL = 1
STREAM_META = 2


def make_rng(*key: int) -> np.random.Generator:
    """Generador reproducible a partir de una clave de enteros (semilla, flujo, índice)."""
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def metric_success(results: Sequence[EpisodeResult]) -> float:
    """Proporción de episodios exitosos (Σ s_i)/n_ep."""
    if not results:
        raise ContractViolation("metric_success requiere al menos un episodio")
    return sum(1 for r in results if r.success) / len(results)


def metric_steps(results: Sequence[EpisodeResult]) -> float:
    """Pasos promedio por episodio (Σ t_i)/n_ep; los episodios fallidos cuentan el cutoff completo."""
    if not results:
        raise ContractViolation("metric_steps requiere al menos un episodio")
    return math.fsum(r.steps for r in results) / len(results)


def evaluate_metric(metric: Metric, results: Sequence[EpisodeResult]) -> float:
    if metric is Metric.SUCCESS_RATE:
        return metric_success(results)
    return metric_steps(results)


def y_transform(raw_values: Sequence[float], direction: Direction) -> np.ndarray:
    """
    Estandariza (media 0, desviación muestral 1, piso 1e-9) y niega al minimizar,
    de modo que el argmax de los valores transformados es el óptimo crudo.
    """
    raw = np.asarray(raw_values, dtype=np.float64)
    if raw.size == 0:
        raise ContractViolation("y_transform requiere al menos un valor")
    std = float(np.std(raw, ddof=1)) if raw.size > 1 else 0.0
    transformed = (raw - raw.mean()) / max(std, STD_FLOOR)
    if direction is Direction.MINIMIZE:
        transformed = -transformed
    return transformed


def running_best(values: Sequence[float], direction: Direction) -> Tuple[float, ...]:
    """Óptimo acumulado por meta-episodio."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return ()
    accumulate = np.maximum.accumulate if direction is Direction.MAXIMIZE else np.minimum.accumulate
    return tuple(float(v) for v in accumulate(values))


def run_meta_episode(
    theta: HyperParams,
    env: GridWorld,
    metric: Metric,
    episodes_a: int,
    cutoff: int,
    qo: QOState,
    policy: Optional[BanditPolicy],
    min_runs: int,
    max_runs: int,
    rng: np.random.Generator,
    prior_averages: Sequence[float] = (),
    options: AgentOptions = AgentOptions(),
    index: int = 0,
    phase: Phase = Phase.BO,
    seed_key: Tuple[int, ...] = (),
) -> Tuple[MetaEpisodeRecord, QOState]:
    """
    Evalúa θ: cada consulta crea un agente nuevo y corre `episodes_a` episodios;
    entre consultas el bandit decide si repetir. Devuelve el registro promediado
    y el estado QO actualizado.
    """
    if episodes_a < 1:
        raise ContractViolation(f"episodes_a debe ser >= 1: {episodes_a}")
    query_values: List[float] = []
    next_query = True
    while next_query:
        results = run_episodes(env, theta, episodes_a, cutoff, rng, options)
        query_values.append(evaluate_metric(metric, results))
        next_query, qo = decide_if_next_query(
            query_values, prior_averages, qo, policy, min_runs, max_runs, metric.direction, rng
        )

    record = MetaEpisodeRecord(
        index=index,
        phase=phase,
        theta=theta,
        query_values=tuple(query_values),
        f_avg=math.fsum(query_values) / len(query_values),
        episodes_per_query=episodes_a,
        seed_key=seed_key,
    )
    return record, qo


class MetaOptimizer:
    """
    Una ejecución del optimizador (BO o búsqueda aleatoria) con semilla fija.

    El estado QO persiste entre los meta-episodios de la ejecución y se
    reinicia en cada ejecución nueva.
    """

    def __init__(self, config: ExperimentConfig, seed: Optional[int] = None, env: Optional[GridWorld] = None):
        self.config = config
        self.seed = config.base_seed if seed is None else seed
        self.env = env or GridWorld(load_layout(config.layout_path or settings.layout_path or None))
        self.qo = QOState()
        self.X: List[Tuple[float, ...]] = []
        self.raw: List[float] = []
        self.records: List[MetaEpisodeRecord] = []

    def _load_prior_data(self) -> None:
        if not self.config.prior_data_path:
            return
        dataset = read_dataset_csv(self.config.prior_data_path)
        if dataset.dim != THETA_DIM:
            raise ContractViolation(f"los datos previos tienen d={dataset.dim}, se esperaba {THETA_DIM}")
        self.X.extend(tuple(float(v) for v in row) for row in dataset.X)
        self.raw.extend(float(v) for v in dataset.y)
        logger.info(f"📦 {dataset.n} observaciones previas cargadas desde {self.config.prior_data_path}")

    def _evaluate(self, theta: HyperParams, phase: Phase) -> MetaEpisodeRecord:
        index = len(self.records)
        seed_key = (self.seed, STREAM_META, index)
        cfg = self.config
        record, self.qo = run_meta_episode(
            theta, self.env, cfg.metric, cfg.episodes_a, cfg.cutoff,
            self.qo, cfg.bandit, cfg.min_runs, cfg.max_runs,
            make_rng(*seed_key),
            prior_averages=tuple(self.raw),
            options=cfg.agent_options,
            index=index,
            phase=phase,
            seed_key=seed_key,
        )
        self.records.append(record)
        self.X.append(theta.as_vector())
        self.raw.append(record.f_avg)
        logger.debug(
            f"[seed={self.seed}] meta-episodio {index} ({phase.value}) θ={theta.label()} "
            f"f_avg={record.f_avg:.4f} consultas={record.query_count}"
        )
        return record

    def _propose_bo(self, iteration: int) -> HyperParams:
        rng = make_rng(self.seed, STREAM_PROPOSAL, iteration)
        if not self.raw:
            dataset = GPDataset.empty(THETA_DIM)
            f_best = 0.0
        else:
            y = y_transform(self.raw, self.config.direction)
            dataset = GPDataset(np.asarray(self.X), y)
            f_best = float(y.max())
        model = fit(dataset, self.config.kernel)
        candidate = propose_next(model, f_best, self.config.acquisition, rng, dim=THETA_DIM)
        return candidate.theta

    def _propose_random(self, iteration: int) -> HyperParams:
        rng = make_rng(self.seed, STREAM_PROPOSAL, iteration)
        return HyperParams.from_vector(rng.random(THETA_DIM))

    def run(self) -> OptimizerRun:
        cfg = self.config
        started = time.perf_counter()
        self._load_prior_data()

        # el LHS inicial se omite con datos previos; la búsqueda aleatoria gasta
        # ese mismo presupuesto en θ uniformes
        initial = cfg.init_lh if not self.raw else 0
        if cfg.algorithm is Algorithm.BO:
            if initial:
                for point in latin_hypercube(initial, THETA_DIM, make_rng(self.seed, STREAM_LHS)):
                    self._evaluate(HyperParams.from_vector(point), Phase.INIT_LH)
            iterations = cfg.episodes_bo
        else:
            iterations = cfg.episodes_bo + initial

        for iteration in range(iterations):
            if cfg.algorithm is Algorithm.BO:
                theta = self._propose_bo(iteration)
                phase = Phase.BO
            else:
                theta = self._propose_random(iteration)
                phase = Phase.RANDOM
            self._evaluate(theta, phase)

        run = OptimizerRun(
            algorithm=cfg.algorithm,
            metric=cfg.metric,
            seed=self.seed,
            records=tuple(self.records),
            best_curve=running_best([r.f_avg for r in self.records], cfg.direction),
            wall_time=time.perf_counter() - started,
        )
        best = run.best_record
        logger.info(
            f"✅ [{cfg.algorithm.value} seed={self.seed}] {len(run.records)} meta-episodios, "
            f"{run.total_queries} consultas, mejor θ={best.theta.label()} f={best.f_avg:.4f} "
            f"({run.wall_time:.1f}s)"
        )
        return run


def run_optimizer(config: ExperimentConfig, seed: Optional[int] = None, env: Optional[GridWorld] = None) -> OptimizerRun:
    """Ejecución completa de BO: init_LH opcional y `episodes_bo` meta-episodios."""
    if config.algorithm is not Algorithm.BO:
        config = config.model_copy(update={"algorithm": Algorithm.BO})
    return MetaOptimizer(config, seed, env).run()


def run_random_search(config: ExperimentConfig, seed: Optional[int] = None, env: Optional[GridWorld] = None) -> OptimizerRun:
    """Mismo protocolo con θ uniforme en [0,1]⁴ y sin GP; el bandit se aplica igual."""
    if config.algorithm is not Algorithm.RANDOM_SEARCH:
        config = config.model_copy(update={"algorithm": Algorithm.RANDOM_SEARCH})
    return MetaOptimizer(config, seed, env).run()


def run_execution(config: ExperimentConfig, seed: Optional[int] = None, env: Optional[GridWorld] = None) -> OptimizerRun:
    """Despacha según `config.algorithm`."""
    if config.algorithm is Algorithm.RANDOM_SEARCH:
        return run_random_search(config, seed, env)
    return run_optimizer(config, seed, env)
