from fastapi import APIRouter

from app.core.settings import settings
from app.models.api import LayoutResponse
from app.utils.gridworld import GridWorld, load_layout

router = APIRouter()


@router.get("/layouts/default", response_model=LayoutResponse, tags=["Layouts"])
async def default_layout():
    """Layout configurado (o el de doble bloqueo incluido) renderizado por fase."""
    env = GridWorld(load_layout(settings.layout_path or None))
    spec = env.spec
    return LayoutResponse(
        width=spec.width,
        height=spec.height,
        start=list(spec.start),
        goal=list(spec.goal),
        change_episodes=list(spec.change_episodes),
        phases={str(episode): env.render(episode) for episode in spec.phase_starts()},
    )
