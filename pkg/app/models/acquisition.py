"""
Modelos Pydantic para la capa de adquisición.
"""

from enum import Enum
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.models.agent import HyperParams


class Direction(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


class AcquisitionConfig(BaseModel):
    """Optimizador interno de EI: búsqueda aleatoria multi-inicio + refinamiento por coordenadas."""
    model_config = ConfigDict(frozen=True)

    n_random_starts: int = Field(10_000, ge=1)
    n_local_refine: int = Field(5, ge=0)
    refine_iterations: int = Field(100, ge=3)
    direction: Direction = Direction.MAXIMIZE


class Candidate(BaseModel):
    """Punto propuesto X_t y su valor de adquisición."""
    model_config = ConfigDict(frozen=True)

    point: Tuple[float, ...]
    acquisition_value: float

    @property
    def theta(self) -> HyperParams:
        return HyperParams.from_vector(self.point)
