"""
Modelos Pydantic para experimentos: configuración, registros de meta-episodios,
corridas del optimizador y estadísticas de curvas.
"""

import hashlib
import json
import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import ConfigError
from app.models.acquisition import AcquisitionConfig, Direction
from app.models.agent import ActionSelection, AgentOptions, HyperParams, TraceKind
from app.models.bandit import Arm, BanditPolicy, PolicyKind
from app.models.gp import KernelParams


class Metric(str, Enum):
    """Métrica de desempeño f_A(θ) y su dirección de optimización."""
    SUCCESS_RATE = "success_rate"
    STEPS_PER_EPISODE = "steps_per_episode"

    @property
    def direction(self) -> Direction:
        if self is Metric.SUCCESS_RATE:
            return Direction.MAXIMIZE
        return Direction.MINIMIZE


class Algorithm(str, Enum):
    BO = "bo"
    RANDOM_SEARCH = "random_search"


class Phase(str, Enum):
    INIT_LH = "init_lh"
    BO = "bo"
    RANDOM = "random"


class ExperimentConfig(BaseModel):
    """
    Vector de configuración del framework (Θ).

    Esquema plano: cada campo es una clave del archivo de configuración.
    Claves desconocidas se rechazan.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    metric: Metric = Metric.SUCCESS_RATE
    algorithm: Algorithm = Algorithm.BO
    episodes_bo: int = Field(30, ge=1, description="Meta-episodios de BO")
    episodes_a: int = Field(50, ge=1, description="Episodios del agente por consulta")
    cutoff: int = Field(400, ge=1, description="Pasos máximos por episodio")
    min_runs: int = Field(2, ge=1)
    max_runs: int = Field(5, ge=1)
    init_lh: int = Field(0, ge=0, description="Meta-episodios iniciales por hipercubo latino")
    n_executions: int = Field(10, ge=1)
    base_seed: int = Field(0, ge=0)
    layout_path: str = ""
    prior_data_path: str = ""

    # bandit (QO)
    bandit_policy: Optional[PolicyKind] = None
    bandit_epsilon: float = Field(0.2, ge=0.0, le=1.0)
    bandit_tau: float = Field(1.0, gt=0.0)
    bandit_greedy_tie: Arm = Arm.RESAMPLE

    # kernel del GP
    kernel_sigma_f2: float = Field(0.8, gt=0.0)
    kernel_sigma_n2: float = Field(0.17, ge=0.0)
    kernel_lengthscales: Tuple[float, ...] = (0.12, 0.12, 0.12, 0.12)

    # optimizador de la adquisición
    acq_n_random_starts: int = Field(10_000, ge=1)
    acq_n_local_refine: int = Field(5, ge=0)
    acq_refine_iterations: int = Field(100, ge=3, description="Evaluaciones de EI por arranque refinado (mínimo una búsqueda de 3)")

    # agente
    agent_action_selection: ActionSelection = ActionSelection.EGREEDY
    agent_softmax_tau: float = Field(1.0, gt=0.0)
    agent_traces: TraceKind = TraceKind.ACCUMULATING

    @field_validator("bandit_policy", mode="before")
    @classmethod
    def _none_policy(cls, value):
        if isinstance(value, str) and value.strip().lower() in ("", "none", "null"):
            return None
        return value

    @field_validator("kernel_lengthscales", mode="before")
    @classmethod
    def _split_lengthscales(cls, value):
        if isinstance(value, str):
            return tuple(float(part) for part in value.split(",") if part.strip())
        return value

    @field_validator("kernel_lengthscales")
    @classmethod
    def _four_lengthscales(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(value) != 4:
            raise ValueError(f"se esperaban 4 lengthscales (una por componente de θ), hay {len(value)}")
        if any(component == 0.0 for component in value):
            raise ValueError("ninguna lengthscale puede ser 0")
        return value

    @model_validator(mode="after")
    def _check_runs(self) -> "ExperimentConfig":
        if self.min_runs > self.max_runs:
            raise ConfigError(
                f"min_runs ({self.min_runs}) no puede ser mayor que max_runs ({self.max_runs})",
                ["min_runs", "max_runs"],
            )
        return self

    @property
    def direction(self) -> Direction:
        return self.metric.direction

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(
            sigma_f2=self.kernel_sigma_f2,
            sigma_n2=self.kernel_sigma_n2,
            lengthscales=self.kernel_lengthscales,
        )

    @property
    def acquisition(self) -> AcquisitionConfig:
        return AcquisitionConfig(
            n_random_starts=self.acq_n_random_starts,
            n_local_refine=self.acq_n_local_refine,
            refine_iterations=self.acq_refine_iterations,
            direction=self.direction,
        )

    @property
    def bandit(self) -> Optional[BanditPolicy]:
        if self.bandit_policy is None:
            return None
        return BanditPolicy(
            kind=self.bandit_policy,
            epsilon=self.bandit_epsilon,
            tau=self.bandit_tau,
            greedy_tie=self.bandit_greedy_tie,
        )

    @property
    def agent_options(self) -> AgentOptions:
        return AgentOptions(
            action_selection=self.agent_action_selection,
            softmax_tau=self.agent_softmax_tau,
            traces=self.agent_traces,
        )

    def to_key_values(self) -> Dict[str, str]:
        """Claves y valores en el formato del archivo de configuración."""
        values = {}
        for key, value in self.model_dump(mode="json").items():
            if value is None:
                values[key] = "none"
            elif isinstance(value, list):
                values[key] = ",".join(repr(float(v)) for v in value)
            else:
                values[key] = str(value)
        return values

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class MetaEpisodeRecord(BaseModel):
    """Un meta-episodio: θ, valores por consulta y su promedio f_avg."""
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0)
    phase: Phase
    theta: HyperParams
    query_values: Tuple[float, ...] = Field(..., min_length=1)
    f_avg: float
    episodes_per_query: int = Field(..., ge=1)
    seed_key: Tuple[int, ...] = ()

    @property
    def query_count(self) -> int:
        return len(self.query_values)

    @model_validator(mode="after")
    def _check_average(self) -> "MetaEpisodeRecord":
        mean = math.fsum(self.query_values) / len(self.query_values)
        if abs(mean - self.f_avg) > 1e-12:
            raise ValueError(f"f_avg={self.f_avg} no coincide con la media de query_values ({mean})")
        return self


class OptimizerRun(BaseModel):
    """Trayectoria completa de una ejecución del optimizador."""
    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm
    metric: Metric
    seed: int
    records: Tuple[MetaEpisodeRecord, ...]
    best_curve: Tuple[float, ...]
    wall_time: float = Field(0.0, ge=0.0, description="Segundos")

    @model_validator(mode="after")
    def _check_curve(self) -> "OptimizerRun":
        if len(self.best_curve) != len(self.records):
            raise ValueError("best_curve debe tener un valor por registro")
        sign = 1.0 if self.metric.direction is Direction.MAXIMIZE else -1.0
        for previous, current in zip(self.best_curve, self.best_curve[1:]):
            if sign * (current - previous) < 0.0:
                raise ValueError("best_curve no es monótona")
        return self

    @property
    def total_queries(self) -> int:
        return sum(record.query_count for record in self.records)

    def ranked_records(self) -> List[MetaEpisodeRecord]:
        """Registros del mejor al peor según la dirección de la métrica (estable por índice)."""
        sign = -1.0 if self.metric.direction is Direction.MAXIMIZE else 1.0
        return sorted(self.records, key=lambda r: (sign * r.f_avg, r.index))

    @property
    def best_record(self) -> MetaEpisodeRecord:
        return self.ranked_records()[0]

    @property
    def second_best_record(self) -> Optional[MetaEpisodeRecord]:
        ranked = self.ranked_records()
        return ranked[1] if len(ranked) > 1 else None


class CurvePoint(BaseModel):
    """Estadísticas de best_curve entre ejecuciones en un meta-episodio."""
    model_config = ConfigDict(frozen=True)

    meta_episode: int
    mean: float
    std: float = Field(..., ge=0.0)
    ci_half_width: float = Field(..., ge=0.0)
    min: float
    max: float
    improved: int = Field(0, ge=0, description="Ejecuciones que mejoraron su óptimo en este meta-episodio")


class CurveStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_runs: int
    points: Tuple[CurvePoint, ...]

    @property
    def stalled_meta_episodes(self) -> int:
        """Meta-episodios (después del primero) en los que ninguna ejecución mejoró."""
        return sum(1 for point in self.points[1:] if point.improved == 0)
