"""
Modelos de datos de la aplicación.
"""

from app.models.agent import HyperParams, AgentOptions, EpisodeResult, SOAR_DEFAULT
from app.models.bandit import Arm, ArmStats, BanditPolicy, PolicyKind, QOState
from app.models.experiment import (
    Algorithm,
    CurveStats,
    ExperimentConfig,
    MetaEpisodeRecord,
    Metric,
    OptimizerRun,
    Phase,
)
from app.models.gp import GPDataset, GPModel, KernelParams, Posterior
from app.models.gridworld import Action, EnvState, GridSpec, ObstacleRule

__all__ = [
    "HyperParams",
    "AgentOptions",
    "EpisodeResult",
    "SOAR_DEFAULT",
    "Arm",
    "ArmStats",
    "BanditPolicy",
    "PolicyKind",
    "QOState",
    "Algorithm",
    "CurveStats",
    "ExperimentConfig",
    "MetaEpisodeRecord",
    "Metric",
    "OptimizerRun",
    "Phase",
    "GPDataset",
    "GPModel",
    "KernelParams",
    "Posterior",
    "Action",
    "EnvState",
    "GridSpec",
    "ObstacleRule",
]
