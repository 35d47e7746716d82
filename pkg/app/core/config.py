"""
Carga de la configuración de experimentos.

El archivo es de tipo clave=valor (formato .env, leído con python-dotenv);
las claves son los campos de ExperimentConfig. Un archivo vacío equivale a
los valores por defecto del protocolo original.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.errors import ConfigError
from app.models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)


def _normalize(values: Mapping[str, Any]) -> Dict[str, Any]:
    """Claves en minúsculas; valores vacíos se consideran no definidos."""
    normalized = {}
    for key, value in values.items():
        if value is None or (isinstance(value, str) and value.strip() == ""):
            continue
        normalized[key.strip().lower()] = value.strip() if isinstance(value, str) else value
    return normalized


def parse_overrides(pairs: Iterable[str]) -> Dict[str, str]:
    """Convierte ["clave=valor", ...] en un diccionario."""
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override inválido {pair!r}, se esperaba clave=valor", [pair])
        key, value = pair.split("=", 1)
        overrides[key.strip().lower()] = value.strip()
    return overrides


def build_config(values: Mapping[str, Any]) -> ExperimentConfig:
    """Valida un diccionario de claves y devuelve la configuración con defaults aplicados."""
    try:
        return ExperimentConfig(**_normalize(values))
    except ValidationError as e:
        keys = []
        messages = []
        for error in e.errors():
            key = ".".join(str(part) for part in error["loc"]) or "config"
            keys.append(key)
            messages.append(f"{key}: {error['msg']}")
        raise ConfigError("; ".join(messages), keys) from e


def load_config(
    path: Union[str, Path, None] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Lee el archivo (si se indica), aplica overrides y valida todos los invariantes."""
    values: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"no existe el archivo de configuración: {config_path}", ["config"])
        values.update(_normalize(dotenv_values(config_path)))
        logger.debug(f"Configuración leída de {config_path}: {sorted(values)}")
    values.update(_normalize(overrides or {}))
    return build_config(values)


def dump_config(config: ExperimentConfig) -> str:
    """Serializa la configuración en el mismo formato clave=valor que acepta load_config."""
    return "\n".join(f"{key}={value}" for key, value in config.to_key_values().items()) + "\n"
