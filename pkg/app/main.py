from fastapi import FastAPI, Request
import logging
from contextlib import asynccontextmanager

from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, RedirectResponse

from app.core.errors import ConfigError, RLOptError
from app.core.logging import setup_logging
from app.core.settings import settings
from app.api import api_router

setup_logging(settings.log_level)

logger = logging.getLogger(__name__)

@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Maneja el ciclo de vida de la aplicación usando el patrón lifespan.
    """
    # Startup
    logger.info(f"✅ RLOpt API inicializada (output_dir={settings.output_dir}, max_workers={settings.max_workers})")

    yield  # Aquí la aplicación está ejecutándose

    # Shutdown
    logger.info("RLOpt API cerrada exitosamente")


# Inicializar la aplicación FastAPI con lifespan
app = FastAPI(
    title="RLOpt API",
    description="Optimización bayesiana de hiperparámetros de SARSA(λ) con bandits de consultas",
    version="1.0.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.origins_list,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(RLOptError)
async def rlopt_error_handler(request: Request, exc: RLOptError):
    """Errores de la aplicación como JSON 4xx (mismo formato que HTTPException)."""
    status_code = 422 if isinstance(exc, ConfigError) else 400
    logger.error(f"❌ {request.method} {request.url.path}: {exc}")
    content = {"detail": str(exc), "error": type(exc).__name__}
    if isinstance(exc, ConfigError):
        content["keys"] = exc.keys
    return JSONResponse(status_code=status_code, content=content)


# 🔧 Configurar módulos de la API (estándar FastAPI)
app.include_router(api_router)  # ✅ HTTP endpoints con prefix="/v1"


@app.get("/", include_in_schema=False)
async def root():
    """Sin frontend: la raíz redirige a la documentación de la API."""
    return RedirectResponse(url="/docs")


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=settings.port,
        reload=settings.environment == "development",
        log_level=settings.log_level.lower(),
    )
