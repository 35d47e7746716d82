"""
Modelos para la regresión con procesos gaussianos.

KernelParams es configuración (Pydantic); el dataset y el modelo ajustado
guardan arreglos numpy, por eso son dataclasses inmutables.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.errors import ContractViolation


class KernelParams(BaseModel):
    """Hiperparámetros del kernel exponencial cuadrático: σ_f², σ_n² y el vector l."""
    model_config = ConfigDict(frozen=True)

    sigma_f2: float = Field(0.8, gt=0.0, description="Varianza de la señal σ_f²")
    sigma_n2: float = Field(0.17, ge=0.0, description="Varianza del ruido σ_n²")
    lengthscales: Tuple[float, ...] = Field((0.12, 0.12, 0.12, 0.12), min_length=1)

    @field_validator("lengthscales")
    @classmethod
    def _nonzero(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(component == 0.0 for component in value):
            raise ValueError("ninguna componente de lengthscales puede ser 0")
        return value

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def prior_variance(self) -> float:
        return self.sigma_f2 + self.sigma_n2


@dataclass(frozen=True)
class GPDataset:
    """Observaciones D_n = {(X_i, y_i)} con la media previa μ0 evaluada en cada X_i."""
    X: np.ndarray
    y: np.ndarray
    mu0: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)  # entradas unidimensionales como columna
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        mu0 = np.zeros_like(y) if self.mu0 is None else np.asarray(self.mu0, dtype=np.float64).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or mu0.shape != y.shape:
            raise ContractViolation(f"dimensiones inconsistentes: X{X.shape}, y{y.shape}, mu0{mu0.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(mu0))):
            raise ContractViolation("el dataset contiene valores no finitos")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "mu0", mu0)

    @classmethod
    def empty(cls, dim: int) -> "GPDataset":
        return cls(np.empty((0, dim)), np.empty(0))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class GPModel:
    """GP ajustado: K = chol·cholᵀ (con `jitter` en la diagonal) y alpha_vec = K⁻¹(y − μ0)."""
    dataset: GPDataset
    params: KernelParams
    K: np.ndarray
    chol: np.ndarray
    alpha_vec: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def is_empty(self) -> bool:
        return self.dataset.n == 0


@dataclass(frozen=True)
class Posterior:
    mean: float
    variance: float = field(default=0.0)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))
