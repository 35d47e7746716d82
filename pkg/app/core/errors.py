"""
Jerarquía de excepciones del optimizador.

La API las traduce a respuestas 4xx y la CLI a un código de salida distinto de cero.
Las que llevan atributos propios definen `__reduce__`: cruzan el límite del
ProcessPoolExecutor de run_batch y deben reconstruirse igual en el proceso padre.
"""

from typing import Optional


class RLOptError(Exception):
    """Error base de la aplicación."""


class ConfigError(RLOptError):
    """Configuración inválida; `keys` nombra las claves responsables."""

    def __init__(self, message: str, keys: Optional[list] = None):
        self.message = message
        self.keys = list(keys or [])
        prefix = f"[{', '.join(self.keys)}] " if self.keys else ""
        super().__init__(f"{prefix}{message}")

    def __reduce__(self):
        return type(self), (self.message, self.keys)


class LayoutError(RLOptError):
    """Archivo de layout del gridworld inválido o sin camino inicio→meta."""


class ContractViolation(RLOptError, ValueError):
    """Uso incorrecto de una operación (precondición violada)."""


class NotPositiveDefiniteError(RLOptError):
    """La matriz del kernel no se pudo factorizar ni con el jitter máximo."""

    def __init__(self, jitter: float):
        self.jitter = jitter
        super().__init__(f"La matriz del kernel no es definida positiva (jitter={jitter:g})")

    def __reduce__(self):
        return type(self), (self.jitter,)


class ExecutionError(RLOptError):
    """Falla de una ejecución dentro de un batch; `seed` identifica la ejecución."""

    def __init__(self, seed: int, cause: BaseException):
        self.seed = seed
        self.cause = cause
        super().__init__(f"La ejecución con semilla {seed} falló: {cause}")

    def __reduce__(self):
        return type(self), (self.seed, self.cause)
