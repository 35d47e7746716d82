"""
Modelos Pydantic para el agente SARSA(λ).
"""

from enum import Enum
from typing import Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field


class HyperParams(BaseModel):
    """Vector θ = (α, ε, γ, λ) que explora el optimizador."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: float = Field(..., ge=0.0, le=1.0, description="Tasa de aprendizaje")
    epsilon: float = Field(..., ge=0.0, le=1.0, description="Tasa de exploración")
    gamma: float = Field(..., ge=0.0, le=1.0, description="Factor de descuento")
    lambda_: float = Field(..., ge=0.0, le=1.0, alias="lambda", description="Decaimiento de las trazas")

    def as_vector(self) -> Tuple[float, float, float, float]:
        return (self.alpha, self.epsilon, self.gamma, self.lambda_)

    @classmethod
    def from_vector(cls, values: Sequence[float]) -> "HyperParams":
        alpha, epsilon, gamma, lambda_ = (float(v) for v in values)
        return cls(alpha=alpha, epsilon=epsilon, gamma=gamma, lambda_=lambda_)

    def label(self) -> str:
        return "(" + ", ".join(f"{v:g}" for v in self.as_vector()) + ")"


# Configuración por defecto de SARSA(λ) en la arquitectura Soar
SOAR_DEFAULT = HyperParams.from_vector((0.3, 0.1, 0.9, 0.001))

# Mejores configuraciones reportadas para cada métrica (referencia para replays)
REFERENCE_BEST_SUCCESS = HyperParams.from_vector((0.538, 0.49, 0.69, 0.686))
REFERENCE_SECOND_SUCCESS = HyperParams.from_vector((0.582, 0.553, 0.653, 0.321))
REFERENCE_BEST_STEPS = HyperParams.from_vector((0.607, 0.191, 0.667, 0.707))
REFERENCE_SECOND_STEPS = HyperParams.from_vector((0.291, 0.38, 0.5, 0.784))


class ActionSelection(str, Enum):
    EGREEDY = "egreedy"
    SOFTMAX = "softmax"


class TraceKind(str, Enum):
    ACCUMULATING = "accumulating"
    REPLACING = "replacing"


class AgentOptions(BaseModel):
    """Opciones del agente que no forman parte de θ."""
    model_config = ConfigDict(frozen=True)

    action_selection: ActionSelection = ActionSelection.EGREEDY
    softmax_tau: float = Field(1.0, gt=0.0)
    traces: TraceKind = TraceKind.ACCUMULATING


class EpisodeResult(BaseModel):
    """Resultado de un episodio: t_i (pasos) y s_i (éxito)."""
    model_config = ConfigDict(frozen=True)

    steps: int = Field(..., ge=1)
    success: bool
    episode_index: int = Field(..., ge=0)
    reward: float = 0.0
