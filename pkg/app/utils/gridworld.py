"""
Entorno gridworld determinista con cambios de obstáculos en episodios fijos.
Incluye el parser del formato de layout en texto plano.
"""

import bisect
import logging
import re
from pathlib import Path
from typing import FrozenSet, List, Optional, Tuple, Union

from pydantic import ValidationError

from app.core.errors import ContractViolation, LayoutError
from app.models.gridworld import Action, Cell, EnvState, GridSpec, ObstacleKind, ObstacleRule

logger = logging.getLogger(__name__)

DEFAULT_LAYOUT_PATH = Path(__file__).resolve().parent.parent / "data" / "double_blocking.txt"

_TOKEN = re.compile(r"^(?:(?P<simple>[.#SG])|(?P<kind>[CO])(?P<episode>\d+))$")


class GridWorld:
    """
    Entorno sobre un GridSpec.

    Precalcula un conjunto de obstáculos por fase; todas las operaciones son
    puras respecto de (spec, estado), así que una instancia puede compartirse
    o crearse una por worker.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self._phase_starts = spec.phase_starts()
        self._phase_blocked = [spec.blocked_cells(e) for e in self._phase_starts]

    def active_obstacles(self, episode: int) -> FrozenSet[Cell]:
        """Celdas bloqueadas en el episodio dado."""
        if episode < 0:
            raise ContractViolation(f"episodio negativo: {episode}")
        phase = bisect.bisect_right(self._phase_starts, episode) - 1
        return self._phase_blocked[phase]

    def reset(self, episode: int) -> EnvState:
        """Devuelve el agente a la celda inicial para el episodio dado."""
        if episode < 0:
            raise ContractViolation(f"episodio negativo: {episode}")
        return EnvState(self.spec.start, episode, 0)

    def is_terminal(self, state: EnvState) -> bool:
        return state.position == self.spec.goal

    def step(self, state: EnvState, action: Action) -> Tuple[EnvState, float, bool]:
        """
        Aplica una acción.

        Un movimiento hacia fuera de la grilla o contra un obstáculo activo deja
        al agente en su lugar. La recompensa es 1 sólo al entrar a la meta.
        """
        if state.position == self.spec.goal:
            raise ContractViolation("step() desde un estado terminal; llamar a reset() primero")
        row, col = state.position
        dr, dc = Action(action).delta
        target = (row + dr, col + dc)
        if not self.spec.in_bounds(target) or target in self.active_obstacles(state.episode_index):
            target = state.position
        next_state = EnvState(target, state.episode_index, state.step_count + 1)
        if target == self.spec.goal:
            return next_state, 1.0, True
        return next_state, 0.0, False

    def render(self, episode: int) -> str:
        """Mapa de texto del episodio dado (# bloqueada, . libre)."""
        blocked = self.active_obstacles(episode)
        lines = []
        for row in range(self.spec.height):
            chars = []
            for col in range(self.spec.width):
                cell = (row, col)
                if cell == self.spec.start:
                    chars.append("S")
                elif cell == self.spec.goal:
                    chars.append("G")
                else:
                    chars.append("#" if cell in blocked else ".")
            lines.append("".join(chars))
        return "\n".join(lines)


def parse_layout(text: str, change_episodes: Optional[List[int]] = None) -> GridSpec:
    """
    Parsea un layout en texto plano.

    Formato: líneas que empiezan con ';' son comentarios; la primera línea de
    datos es "ancho alto"; luego `alto` filas de tokens separados por espacios.
    """
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith(";")]
    if not lines:
        raise LayoutError("layout vacío")

    header = lines[0].split()
    if len(header) != 2 or not all(part.isdigit() for part in header):
        raise LayoutError(f"cabecera inválida, se esperaba 'ancho alto': {lines[0]!r}")
    width, height = int(header[0]), int(header[1])
    rows = lines[1:]
    if len(rows) != height:
        raise LayoutError(f"se esperaban {height} filas y hay {len(rows)}")

    start = goal = None
    obstacles: List[ObstacleRule] = []
    for row, line in enumerate(rows):
        tokens = line.split()
        if len(tokens) != width:
            raise LayoutError(f"fila {row}: se esperaban {width} celdas y hay {len(tokens)}")
        for col, token in enumerate(tokens):
            match = _TOKEN.match(token)
            if match is None:
                raise LayoutError(f"token desconocido {token!r} en ({row}, {col})")
            simple = match.group("simple")
            if simple == "S":
                if start is not None:
                    raise LayoutError("más de una celda S")
                start = (row, col)
            elif simple == "G":
                if goal is not None:
                    raise LayoutError("más de una celda G")
                goal = (row, col)
            elif simple == "#":
                obstacles.append(ObstacleRule(cell=(row, col)))
            elif match.group("kind"):
                kind = ObstacleKind.CLOSES_AT if match.group("kind") == "C" else ObstacleKind.OPENS_AT
                episode = int(match.group("episode"))
                if episode < 1:
                    raise LayoutError(f"episodio de cambio inválido en ({row}, {col}): {episode}")
                obstacles.append(ObstacleRule(cell=(row, col), kind=kind, episode=episode))

    if start is None or goal is None:
        raise LayoutError("el layout debe tener exactamente una S y una G")

    try:
        return GridSpec(
            width=width,
            height=height,
            start=start,
            goal=goal,
            obstacles=tuple(obstacles),
            change_episodes=tuple(change_episodes or ()),
        )
    except ValidationError as e:
        raise LayoutError(f"layout inválido: {e}") from e


def load_layout(path: Union[str, Path, None] = None) -> GridSpec:
    """Carga y valida un layout; sin ruta usa el layout de doble bloqueo incluido."""
    layout_path = Path(path) if path else DEFAULT_LAYOUT_PATH
    if not layout_path.is_file():
        raise LayoutError(f"no existe el archivo de layout: {layout_path}")
    spec = parse_layout(layout_path.read_text(encoding="utf-8"))
    logger.debug(f"Layout cargado desde {layout_path}: {spec.width}x{spec.height}, cambios en {list(spec.change_episodes)}")
    return spec
