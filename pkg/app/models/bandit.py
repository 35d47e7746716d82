"""
Modelos Pydantic para el bandit de consultas (QO): brazos stop / resample.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Arm(str, Enum):
    STOP = "stop"
    RESAMPLE = "resample"


class PolicyKind(str, Enum):
    GREEDY = "greedy"
    EGREEDY = "egreedy"
    SOFTMAX = "softmax"
    UCB1 = "ucb1"
    UCB1TUNED = "ucb1tuned"


class BanditPolicy(BaseModel):
    """Política del bandit y sus parámetros (ε para egreedy, τ para softmax)."""
    model_config = ConfigDict(frozen=True)

    kind: PolicyKind
    epsilon: float = Field(0.2, ge=0.0, le=1.0)
    tau: float = Field(1.0, gt=0.0)
    greedy_tie: Arm = Arm.RESAMPLE

    @property
    def label(self) -> str:
        if self.kind is PolicyKind.EGREEDY:
            return f"egreedy(epsilon={self.epsilon:g})"
        if self.kind is PolicyKind.SOFTMAX:
            return f"softmax(tau={self.tau:g})"
        return self.kind.value


class ArmStats(BaseModel):
    """Pulls n_i, media μ̂_i y suma de desvíos cuadrados m2 (Welford)."""
    model_config = ConfigDict(frozen=True)

    pulls: int = Field(0, ge=0)
    mean: float = 0.0
    m2: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _fresh_is_zero(self) -> "ArmStats":
        if self.pulls == 0 and (self.mean != 0.0 or self.m2 != 0.0):
            raise ValueError("un brazo sin pulls debe tener mean = 0 y m2 = 0")
        return self

    @property
    def variance(self) -> float:
        """Varianza muestral σ̂²; 0 con menos de 2 pulls."""
        if self.pulls < 2:
            return 0.0
        return self.m2 / (self.pulls - 1)


class QOState(BaseModel):
    """Estado del bandit; persiste entre meta-episodios de una misma ejecución."""
    model_config = ConfigDict(frozen=True)

    arm_stop: ArmStats = ArmStats()
    arm_resample: ArmStats = ArmStats()

    @property
    def total_pulls(self) -> int:
        return self.arm_stop.pulls + self.arm_resample.pulls

    def arm(self, arm: Arm) -> ArmStats:
        return self.arm_stop if arm is Arm.STOP else self.arm_resample
