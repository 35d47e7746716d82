from fastapi import APIRouter
from .health import router as health_router
from .experiments import router as experiments_router
from .layouts import router as layouts_router

# Router principal para todos los endpoints de la API
router = APIRouter()

# Incluir routers de módulos específicos
router.include_router(health_router, prefix="/v1")
router.include_router(experiments_router, prefix="/v1")
router.include_router(layouts_router, prefix="/v1")
