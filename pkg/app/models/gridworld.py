"""
Modelos Pydantic para el gridworld de doble bloqueo.
"""

from collections import deque
from enum import Enum, IntEnum
from typing import FrozenSet, Iterable, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import LayoutError

Cell = Tuple[int, int]  # (fila, columna), fila 0 arriba


class Action(IntEnum):
    """Los 4 movimientos cardinales; el valor es el índice en la Q-table."""
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]


_DELTAS = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}

N_ACTIONS = len(Action)


class ObstacleKind(str, Enum):
    PERMANENT = "permanent"
    CLOSES_AT = "closes_at"
    OPENS_AT = "opens_at"


class ObstacleRule(BaseModel):
    """Celda bloqueada según el índice de episodio."""
    model_config = ConfigDict(frozen=True)

    cell: Cell
    kind: ObstacleKind = ObstacleKind.PERMANENT
    episode: Optional[int] = Field(None, ge=1, description="Índice e de closes_at(e)/opens_at(e)")

    @model_validator(mode="after")
    def _check_episode(self) -> "ObstacleRule":
        if self.kind is ObstacleKind.PERMANENT and self.episode is not None:
            raise ValueError("un obstáculo permanente no lleva episodio")
        if self.kind is not ObstacleKind.PERMANENT and self.episode is None:
            raise ValueError(f"{self.kind.value} requiere un índice de episodio")
        return self

    def blocks(self, episode: int) -> bool:
        """True si la celda está bloqueada en el episodio dado."""
        if self.kind is ObstacleKind.PERMANENT:
            return True
        if self.kind is ObstacleKind.CLOSES_AT:
            return episode >= self.episode
        return episode < self.episode


class GridSpec(BaseModel):
    """Layout del gridworld con su calendario de obstáculos."""
    model_config = ConfigDict(frozen=True)

    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    start: Cell
    goal: Cell
    obstacles: Tuple[ObstacleRule, ...] = ()
    change_episodes: Tuple[int, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_change_episodes(cls, data):
        if isinstance(data, dict) and not data.get("change_episodes"):
            episodes = set()
            for rule in data.get("obstacles") or ():
                episode = rule.episode if isinstance(rule, ObstacleRule) else rule.get("episode")
                if episode is not None:
                    episodes.add(episode)
            data = {**data, "change_episodes": tuple(sorted(episodes))}
        return data

    @model_validator(mode="after")
    def _validate_layout(self) -> "GridSpec":
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if not self.in_bounds(cell):
                raise LayoutError(f"{name} {cell} fuera de la grilla {self.width}x{self.height}")
        if self.start == self.goal:
            raise LayoutError("start y goal deben ser celdas distintas")
        for rule in self.obstacles:
            if not self.in_bounds(rule.cell):
                raise LayoutError(f"obstáculo {rule.cell} fuera de la grilla")
            if rule.cell in (self.start, self.goal):
                raise LayoutError(f"obstáculo sobre start/goal en {rule.cell}")
        previous = 0
        for episode in self.change_episodes:
            if episode <= previous:
                raise LayoutError(f"change_episodes debe ser estrictamente creciente y >= 1: {self.change_episodes}")
            previous = episode
        missing = {r.episode for r in self.obstacles if r.episode is not None} - set(self.change_episodes)
        if missing:
            raise LayoutError(f"change_episodes no incluye {sorted(missing)}")
        for episode in self.phase_starts():
            if not self.has_path(episode):
                raise LayoutError(f"no existe camino de start a goal en el episodio {episode}")
        return self

    def in_bounds(self, cell: Cell) -> bool:
        row, col = cell
        return 0 <= row < self.height and 0 <= col < self.width

    def phase_starts(self) -> List[int]:
        """Primer episodio de cada fase; el conjunto de obstáculos es constante dentro de una fase."""
        return [0, *self.change_episodes]

    def blocked_cells(self, episode: int) -> FrozenSet[Cell]:
        return frozenset(rule.cell for rule in self.obstacles if rule.blocks(episode))

    def has_path(self, episode: int) -> bool:
        """BFS de start a goal con los obstáculos activos del episodio."""
        blocked = self.blocked_cells(episode)
        seen = {self.start}
        queue = deque([self.start])
        while queue:
            row, col = queue.popleft()
            if (row, col) == self.goal:
                return True
            for action in Action:
                dr, dc = action.delta
                nxt = (row + dr, col + dc)
                if self.in_bounds(nxt) and nxt not in blocked and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return False

    def free_cells(self, episode: int) -> Iterable[Cell]:
        blocked = self.blocked_cells(episode)
        for row in range(self.height):
            for col in range(self.width):
                if (row, col) not in blocked:
                    yield (row, col)


class EnvState(NamedTuple):
    """Estado vivo de la simulación (tupla inmutable, ruta caliente del agente)."""
    position: Cell
    episode_index: int
    step_count: int
