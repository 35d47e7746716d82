"""
Módulo QO: bandit de dos brazos (stop / resample) que decide si volver a
consultar f(θ) con la misma configuración.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from app.core.errors import ConfigError, ContractViolation
from app.models.acquisition import Direction
from app.models.bandit import Arm, ArmStats, BanditPolicy, PolicyKind, QOState

logger = logging.getLogger(__name__)

_ARMS = (Arm.STOP, Arm.RESAMPLE)
_STD_FLOOR = 1e-9


def update_arm(arm: ArmStats, reward: float) -> ArmStats:
    """Suma un pull con la recurrencia de Welford."""
    pulls = arm.pulls + 1
    delta = reward - arm.mean
    mean = arm.mean + delta / pulls
    m2 = arm.m2 + delta * (reward - mean)
    return ArmStats(pulls=pulls, mean=mean, m2=max(m2, 0.0))


def ucb1_score(arm: ArmStats, t: int) -> float:
    """μ̂_i + √(2·ln t / n_i); +∞ si el brazo no fue jalado."""
    if arm.pulls == 0:
        return math.inf
    return arm.mean + math.sqrt(2.0 * math.log(t) / arm.pulls)


def ucb1tuned_score(arm: ArmStats, t: int) -> float:
    """μ̂_i + √((ln t / n_i)·min(¼, V_i)), V_i = σ̂_i² + √(2·ln t / n_i); +∞ si no fue jalado."""
    if arm.pulls == 0:
        return math.inf
    log_t = math.log(t)
    v = arm.variance + math.sqrt(2.0 * log_t / arm.pulls)
    return arm.mean + math.sqrt((log_t / arm.pulls) * min(0.25, v))


def _argmax_arm(scores: Tuple[float, float], tie: Arm) -> Arm:
    stop, resample = scores
    if stop == resample:
        return tie
    return Arm.STOP if stop > resample else Arm.RESAMPLE


def select_arm(policy: BanditPolicy, state: QOState, rng: np.random.Generator) -> Arm:
    """Elige un brazo según la política."""
    means = (state.arm_stop.mean, state.arm_resample.mean)
    kind = policy.kind

    if kind is PolicyKind.GREEDY:
        return _argmax_arm(means, policy.greedy_tie)

    if kind is PolicyKind.EGREEDY:
        if rng.random() < policy.epsilon:
            return _ARMS[int(rng.integers(len(_ARMS)))]
        return _argmax_arm(means, policy.greedy_tie)

    if kind is PolicyKind.SOFTMAX:
        scaled = policy.tau * np.asarray(means)
        weights = np.exp(scaled - scaled.max())
        probs = weights / weights.sum()
        return Arm.RESAMPLE if rng.random() < probs[1] else Arm.STOP

    t = max(state.total_pulls, 1)
    score = ucb1_score if kind is PolicyKind.UCB1 else ucb1tuned_score
    scores = (score(state.arm_stop, t), score(state.arm_resample, t))
    # los brazos sin pulls (+∞) van primero; empate → resample
    return _argmax_arm(scores, Arm.RESAMPLE)


def quality_reward(
    samples: Sequence[float],
    prior_averages: Sequence[float],
    direction: Direction,
) -> float:
    """
    r = Φ(z): z estandariza la media de las muestras del θ actual contra las
    medias de los meta-episodios anteriores (signo invertido al minimizar).
    """
    if len(prior_averages) < 2:
        z = 0.0
    else:
        priors = np.asarray(prior_averages, dtype=np.float64)
        std = max(float(np.std(priors, ddof=1)), _STD_FLOOR)
        z = (float(np.mean(samples)) - float(np.mean(priors))) / std
        if direction is Direction.MINIMIZE:
            z = -z
    return float(ndtr(z))


def decide_if_next_query(
    samples_for_current_theta: Sequence[float],
    all_prior_meta_averages: Sequence[float],
    qo: QOState,
    policy: Optional[BanditPolicy],
    min_runs: int,
    max_runs: int,
    direction: Direction,
    rng: np.random.Generator,
) -> Tuple[bool, QOState]:
    """
    True si hay que volver a consultar f con el mismo θ.

    Siempre True por debajo de min_runs y False a partir de max_runs. Entre
    ambos límites acredita r al brazo resample y 1 − r al brazo stop y deja
    decidir a la política. Sin política (None) se consulta hasta max_runs.
    """
    if not 1 <= min_runs <= max_runs:
        raise ConfigError(f"se requiere 1 <= min_runs <= max_runs (min_runs={min_runs}, max_runs={max_runs})",
                          ["min_runs", "max_runs"])
    count = len(samples_for_current_theta)
    if count == 0:
        raise ContractViolation("decide_if_next_query requiere al menos una muestra del θ actual")
    if count < min_runs:
        return True, qo
    if count >= max_runs:
        return False, qo
    if policy is None:
        return True, qo

    reward = quality_reward(samples_for_current_theta, all_prior_meta_averages, direction)
    qo = QOState(
        arm_stop=update_arm(qo.arm_stop, 1.0 - reward),
        arm_resample=update_arm(qo.arm_resample, reward),
    )
    arm = select_arm(policy, qo, rng)
    logger.debug(f"QO {policy.label}: r={reward:.3f} → {arm.value}")
    return arm is Arm.RESAMPLE, qo
