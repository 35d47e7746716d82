"""
Agente tabular SARSA(λ) con selección ε-greedy o Softmax.

La Q-table es densa (alto x ancho x 4 acciones) y las trazas de elegibilidad
son dispersas: sólo se guardan los pares con traza >= TRACE_THRESHOLD.
"""

import logging
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from app.core.errors import ContractViolation
from app.models.agent import ActionSelection, AgentOptions, EpisodeResult, HyperParams, TraceKind
from app.models.gridworld import Action, Cell, GridSpec, N_ACTIONS
from app.utils.gridworld import GridWorld

logger = logging.getLogger(__name__)

TRACE_THRESHOLD = 1e-8

TraceKey = Tuple[int, int, int]  # (fila, columna, acción)


class QTable:
    """Valores Q(s, a) sobre todas las celdas de la grilla; 0 para pares no visitados."""

    def __init__(self, height: int, width: int):
        self.values = np.zeros((height, width, N_ACTIONS), dtype=np.float64)

    def row(self, cell: Cell) -> np.ndarray:
        return self.values[cell[0], cell[1]]

    def __getitem__(self, key: Tuple[Cell, int]) -> float:
        cell, action = key
        return float(self.values[cell[0], cell[1], int(action)])

    def __setitem__(self, key: Tuple[Cell, int], value: float) -> None:
        cell, action = key
        self.values[cell[0], cell[1], int(action)] = value

    def copy(self) -> "QTable":
        clone = QTable.__new__(QTable)
        clone.values = self.values.copy()
        return clone


class TraceTable(Dict[TraceKey, float]):
    """Trazas de elegibilidad e(s, a) >= 0; ausente equivale a 0."""

    def get_trace(self, cell: Cell, action: int) -> float:
        return self.get((cell[0], cell[1], int(action)), 0.0)


class Transition(NamedTuple):
    state: Cell
    action: int
    reward: float
    next_state: Cell
    next_action: Optional[int]  # None cuando next_state es terminal


def init_agent(spec: GridSpec, hp: Optional[HyperParams] = None) -> Tuple[QTable, TraceTable]:
    """
    Crea tablas vacías (todo en 0).

    `hp` no siembra conocimiento: dos llamadas con distintos θ producen tablas idénticas.
    """
    return QTable(spec.height, spec.width), TraceTable()


def select_action_egreedy(q: QTable, state: Cell, epsilon: float, rng: np.random.Generator) -> Action:
    """Acción aleatoria uniforme con probabilidad ε; si no, la greedy con desempate aleatorio."""
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolation(f"epsilon fuera de [0, 1]: {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return Action(int(rng.integers(N_ACTIONS)))
    values = q.row(state)
    best = np.flatnonzero(values == values.max())
    if best.size == 1:
        return Action(int(best[0]))
    return Action(int(best[rng.integers(best.size)]))


def softmax_probs(q: QTable, state: Cell, tau: float) -> np.ndarray:
    """p(a) = exp(q(s,a)/τ) / Σ_b exp(q(s,b)/τ), restando el máximo para evitar overflow."""
    if tau <= 0.0:
        raise ContractViolation(f"la temperatura debe ser > 0: {tau}")
    scaled = q.row(state) / tau
    weights = np.exp(scaled - scaled.max())
    return weights / weights.sum()


def select_action_softmax(q: QTable, state: Cell, tau: float, rng: np.random.Generator) -> Action:
    probs = softmax_probs(q, state, tau)
    return Action(int(rng.choice(N_ACTIONS, p=probs)))


def sarsa_lambda_update(
    q: QTable,
    traces: TraceTable,
    transition: Transition,
    hp: HyperParams,
    trace_kind: TraceKind = TraceKind.ACCUMULATING,
) -> Tuple[QTable, TraceTable]:
    """
    Actualización SARSA(λ) in-place.

    δ = r + γ·q(s',a') − q(s,a), con q(s',a') = 0 si s' es terminal. Luego
    q += α·δ·e y e *= γ·λ para cada par con traza; las trazas por debajo de
    TRACE_THRESHOLD se eliminan.
    """
    s, a, r, s_next, a_next = transition
    values = q.values
    bootstrap = 0.0 if a_next is None else values[s_next[0], s_next[1], a_next]
    delta = r + hp.gamma * bootstrap - values[s[0], s[1], a]

    key = (s[0], s[1], int(a))
    if trace_kind is TraceKind.REPLACING:
        traces[key] = 1.0
    else:
        traces[key] = traces.get(key, 0.0) + 1.0

    step = hp.alpha * delta
    decay = hp.gamma * hp.lambda_
    for pair, trace in list(traces.items()):
        values[pair] += step * trace
        trace *= decay
        if trace < TRACE_THRESHOLD:
            del traces[pair]
        else:
            traces[pair] = trace
    return q, traces


def run_episode(
    env: Union[GridWorld, GridSpec],
    q: QTable,
    traces: TraceTable,
    hp: HyperParams,
    episode_index: int,
    cutoff: int,
    rng: np.random.Generator,
    options: AgentOptions = AgentOptions(),
) -> Tuple[EpisodeResult, QTable, TraceTable]:
    """
    Corre un episodio hasta la meta o hasta `cutoff` pasos.

    Las trazas se limpian al inicio; la Q-table persiste (restart del agente).
    El episodio es exitoso sólo si la meta se alcanza en menos de `cutoff` pasos.
    """
    if cutoff < 1:
        raise ContractViolation(f"cutoff debe ser >= 1: {cutoff}")
    if isinstance(env, GridSpec):
        env = GridWorld(env)

    if options.action_selection is ActionSelection.SOFTMAX:
        tau = options.softmax_tau

        def choose(cell: Cell) -> Action:
            return select_action_softmax(q, cell, tau, rng)
    else:
        epsilon = hp.epsilon

        def choose(cell: Cell) -> Action:
            return select_action_egreedy(q, cell, epsilon, rng)

    traces.clear()
    state = env.reset(episode_index)
    action = choose(state.position)
    terminal = False
    total_reward = 0.0
    while state.step_count < cutoff:
        next_state, reward, terminal = env.step(state, action)
        total_reward += reward
        next_action = None if terminal else choose(next_state.position)
        sarsa_lambda_update(
            q, traces,
            Transition(state.position, int(action), reward, next_state.position,
                       None if next_action is None else int(next_action)),
            hp, options.traces,
        )
        state = next_state
        if terminal:
            break
        action = next_action

    success = terminal and state.step_count < cutoff
    result = EpisodeResult(
        steps=state.step_count if success else cutoff,
        success=success,
        episode_index=episode_index,
        reward=total_reward,
    )
    return result, q, traces


def run_episodes(
    env: Union[GridWorld, GridSpec],
    hp: HyperParams,
    episodes: int,
    cutoff: int,
    rng: np.random.Generator,
    options: AgentOptions = AgentOptions(),
) -> List[EpisodeResult]:
    """
    Una consulta: agente nuevo (init) y `episodes` episodios consecutivos.

    La Q-table persiste entre episodios; el calendario de obstáculos se indexa
    por el número de episodio dentro de la consulta.
    """
    if isinstance(env, GridSpec):
        env = GridWorld(env)
    q, traces = init_agent(env.spec, hp)
    results = []
    for episode_index in range(episodes):
        result, q, traces = run_episode(env, q, traces, hp, episode_index, cutoff, rng, options)
        results.append(result)
    return results
