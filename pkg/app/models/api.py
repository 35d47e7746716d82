"""
Modelos Pydantic de request/response para la API HTTP.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.agent import HyperParams
from app.models.experiment import CurvePoint, MetaEpisodeRecord


class ConfigRequest(BaseModel):
    """Claves del archivo de configuración (mismo formato que la CLI)."""
    values: Dict[str, str] = Field(default_factory=dict, description="clave → valor, p. ej. {'episodes_bo': '15'}")


class ConfigResponse(BaseModel):
    valid: bool = True
    config: Dict[str, str]
    config_hash: str


class RunSummary(BaseModel):
    """Resumen de una ejecución: mejor θ y trayectoria de meta-episodios."""
    seed: int
    total_queries: int
    wall_time: float
    best_theta: HyperParams
    best_value: float
    second_best_theta: Optional[HyperParams] = None
    second_best_value: Optional[float] = None
    best_curve: List[float]
    records: List[MetaEpisodeRecord]


class BatchResponse(BaseModel):
    algorithm: str
    metric: str
    config_hash: str
    runs: List[RunSummary]
    curve: List[CurvePoint]
    stalled_meta_episodes: int


class ReplayRequest(ConfigRequest):
    thetas: Dict[str, HyperParams] = Field(..., min_length=1, description="etiqueta → θ")
    repetitions: int = Field(20, ge=1, le=200)
    include_soar_default: bool = True


class ReplayEntry(BaseModel):
    label: str
    theta: HyperParams
    metric_value: float
    metric_std: float
    mean_steps: List[float]
    success_rate: List[float]


class ReplayResponse(BaseModel):
    metric: str
    repetitions: int
    entries: List[ReplayEntry]


class LayoutResponse(BaseModel):
    width: int
    height: int
    start: List[int]
    goal: List[int]
    change_episodes: List[int]
    phases: Dict[str, str] = Field(..., description="episodio de inicio de la fase → grilla renderizada")
