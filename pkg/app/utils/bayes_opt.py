"""
Capa de adquisición de la optimización bayesiana.

- Expected improvement sobre la posterior del GP.
- Maximización de EI en la caja unitaria: búsqueda aleatoria multi-inicio y
  refinamiento de los mejores inicios por secciones doradas coordenada a coordenada.
- Muestreo por hipercubo latino para inicializar el dataset.
"""

import logging
import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm

from app.core.errors import ContractViolation
from app.models.acquisition import AcquisitionConfig, Candidate
from app.models.gp import GPModel
from app.utils.gaussian_process import posterior_batch

logger = logging.getLogger(__name__)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

ArrayLike = Union[float, np.ndarray]


def norm_pdf(z: ArrayLike) -> ArrayLike:
    return norm.pdf(z)


def norm_cdf(z: ArrayLike) -> ArrayLike:
    """Φ(z) vía scipy.special.ndtr (basada en erf/erfc, error absoluto < 1e-15)."""
    return ndtr(z)


def expected_improvement(mean: ArrayLike, std: ArrayLike, f_best: float) -> ArrayLike:
    """
    EI = (μ − f*)·Φ(Z) + σ·φ(Z) con Z = (μ − f*)/σ; para σ = 0, max(μ − f*, 0).

    Acepta escalares o arreglos; siempre maximiza (la dirección se resuelve antes).
    """
    mean_arr = np.asarray(mean, dtype=np.float64)
    std_arr = np.asarray(std, dtype=np.float64)
    if np.any(std_arr < 0.0):
        raise ContractViolation("std debe ser >= 0")
    improvement = mean_arr - f_best
    positive = std_arr > 0.0
    safe_std = np.where(positive, std_arr, 1.0)
    z = improvement / safe_std
    ei = np.where(
        positive,
        improvement * norm_cdf(z) + safe_std * norm_pdf(z),
        np.maximum(improvement, 0.0),
    )
    ei = np.maximum(ei, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def acquisition_values(model: GPModel, points: np.ndarray, f_best: float) -> np.ndarray:
    """EI en cada fila de `points` (prior μ0 = 0)."""
    mean, variance = posterior_batch(model, points, 0.0)
    return expected_improvement(mean, np.sqrt(variance), f_best)


def golden_section_max(func: Callable[[float], float], lo: float, hi: float, evaluations: int) -> Tuple[float, float]:
    """Maximiza una función unimodal en [lo, hi] con exactamente `evaluations` evaluaciones (>= 2)."""
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = func(c), func(d)
    for _ in range(max(evaluations, 2) - 2):
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = func(d)
    return (c, fc) if fc >= fd else (d, fd)


def _refine(model: GPModel, start: np.ndarray, value: float, f_best: float, budget: int) -> Tuple[np.ndarray, float]:
    """
    Pasadas cíclicas de sección dorada por coordenada; acepta sólo mejoras estrictas.

    Cada búsqueda en línea gasta al menos 3 evaluaciones, por eso la
    configuración exige `refine_iterations >= 3`.
    """
    dim = start.shape[0]
    point = start.copy()
    per_line = max(3, budget // (2 * dim))
    remaining = budget
    coordinate = 0
    while remaining >= per_line:
        def along(t: float, axis: int = coordinate) -> float:
            trial = point.copy()
            trial[axis] = t
            return float(acquisition_values(model, trial[None, :], f_best)[0])

        t, candidate_value = golden_section_max(along, 0.0, 1.0, per_line)
        remaining -= per_line
        if candidate_value > value:
            point[coordinate] = t
            value = candidate_value
        coordinate = (coordinate + 1) % dim
    return point, value


def propose_next(
    model: GPModel,
    f_best: float,
    config: AcquisitionConfig,
    rng: np.random.Generator,
    dim: Optional[int] = None,
) -> Candidate:
    """
    X_t = argmax EI(X | D) en la caja [0,1]^d.

    Con modelo vacío devuelve un punto uniforme aleatorio (arranque). Los
    empates se resuelven por el menor índice de muestra, así que el resultado
    es determinista dada la semilla.
    """
    dim = dim or model.dim
    if model.is_empty:
        point = rng.random(dim)
        logger.debug("Modelo vacío: punto de arranque aleatorio")
        return Candidate(point=tuple(float(v) for v in point), acquisition_value=0.0)

    starts = rng.random((config.n_random_starts, dim))
    values = acquisition_values(model, starts, f_best)
    # orden por (valor desc, índice asc)
    order = np.lexsort((np.arange(values.size), -values))
    best_point, best_value = starts[order[0]], float(values[order[0]])

    for index in order[:config.n_local_refine]:
        point, value = _refine(model, starts[index], float(values[index]), f_best, config.refine_iterations)
        if value > best_value:
            best_point, best_value = point, value

    best_point = np.clip(best_point, 0.0, 1.0)
    return Candidate(point=tuple(float(v) for v in best_point), acquisition_value=best_value)


def latin_hypercube(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """
    n puntos en [0,1)^d: en cada dimensión cae exactamente un punto por estrato
    [i/n, (i+1)/n); los estratos se permutan independientemente por dimensión.
    """
    if n < 1 or d < 1:
        raise ContractViolation(f"latin_hypercube requiere n, d >= 1 (n={n}, d={d})")
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    points = (strata + rng.random((n, d))) / n
    # el redondeo nunca debe empujar un punto al estrato siguiente
    upper = np.nextafter((strata + 1) / n, 0.0)
    return np.minimum(points, upper)
