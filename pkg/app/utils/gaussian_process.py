"""
Regresión exacta con procesos gaussianos y kernel exponencial cuadrático.

El ajuste factoriza K por Cholesky (scipy.linalg) y reutiliza el factor para
la media/varianza posterior y la verosimilitud marginal.
"""

import logging
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from app.core.errors import ContractViolation, NotPositiveDefiniteError
from app.models.gp import GPDataset, GPModel, KernelParams, Posterior

logger = logging.getLogger(__name__)

# 0 primero; luego 1e-9 ... 1e-5 (x10) hasta que la factorización funcione
JITTER_LEVELS = (0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5)


def se_kernel(xi: Sequence[float], xj: Sequence[float], params: KernelParams, same_index: bool = False) -> float:
    """σ_f²·exp(−½ (xi−xj)ᵀ diag(l)⁻² (xi−xj)) + σ_n²·[same_index]."""
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    if xi.shape != (params.dim,) or xj.shape != (params.dim,):
        raise ContractViolation(
            f"dimensión incompatible: {xi.shape} y {xj.shape} con {params.dim} lengthscales"
        )
    scaled = (xi - xj) / np.asarray(params.lengthscales)
    value = params.sigma_f2 * float(np.exp(-0.5 * float(scaled @ scaled)))
    if same_index:
        value += params.sigma_n2
    return value


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    """Matriz de covarianzas k(A_i, B_j) sin término de ruido."""
    lengthscales = np.abs(np.asarray(params.lengthscales, dtype=np.float64))
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if A.shape[1] != lengthscales.size or B.shape[1] != lengthscales.size:
        raise ContractViolation(
            f"dimensión incompatible: {A.shape[1]}/{B.shape[1]} con {lengthscales.size} lengthscales"
        )
    sq = cdist(A / lengthscales, B / lengthscales, metric="sqeuclidean")
    return params.sigma_f2 * np.exp(-0.5 * sq)


def fit(dataset: GPDataset, params: KernelParams) -> GPModel:
    """Construye K, la factoriza (con jitter escalonado si hace falta) y cachea K⁻¹(y − μ0)."""
    n = dataset.n
    if n == 0:
        empty = np.empty((0, 0))
        return GPModel(dataset, params, K=empty, chol=empty, alpha_vec=np.empty(0))
    if dataset.dim != params.dim:
        raise ContractViolation(f"el dataset tiene d={dataset.dim} y el kernel {params.dim} lengthscales")
    if params.sigma_n2 == 0.0 and np.unique(dataset.X, axis=0).shape[0] < n:
        raise ContractViolation("filas duplicadas en X requieren sigma_n2 > 0")

    base = kernel_matrix(dataset.X, dataset.X, params) + params.sigma_n2 * np.eye(n)
    for jitter in JITTER_LEVELS:
        K = base + jitter * np.eye(n) if jitter else base
        try:
            chol = cholesky(K, lower=True)
        except LinAlgError:
            logger.debug(f"Cholesky falló con jitter={jitter:g}, escalando")
            continue
        if jitter:
            logger.warning(f"⚠️ K requirió jitter={jitter:g} para ser definida positiva (n={n})")
        alpha_vec = cho_solve((chol, True), dataset.y - dataset.mu0)
        return GPModel(dataset, params, K=K, chol=chol, alpha_vec=alpha_vec, jitter=jitter)
    raise NotPositiveDefiniteError(JITTER_LEVELS[-1])


def posterior_batch(
    model: GPModel,
    Xstar: np.ndarray,
    prior_mean: Union[float, np.ndarray] = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Media y varianza posterior en cada fila de Xstar (forma vectorizada de `posterior`)."""
    Xstar = np.atleast_2d(np.asarray(Xstar, dtype=np.float64))
    prior_mean = np.broadcast_to(np.asarray(prior_mean, dtype=np.float64), (Xstar.shape[0],))
    prior_variance = model.params.prior_variance
    if model.is_empty:
        return prior_mean.copy(), np.full(Xstar.shape[0], prior_variance)

    k_star = kernel_matrix(Xstar, model.dataset.X, model.params)
    mean = prior_mean + k_star @ model.alpha_vec
    v = solve_triangular(model.chol, k_star.T, lower=True)
    variance = prior_variance - np.einsum("ij,ij->j", v, v)
    return mean, np.maximum(variance, 0.0)


def posterior(model: GPModel, xstar: Sequence[float], prior_mean_at_xstar: float = 0.0) -> Posterior:
    """μ(x*) = μ0(x*) + k(x*)ᵀK⁻¹(y − μ0); σ²(x*) = k(x*,x*) − k(x*)ᵀK⁻¹k(x*), truncada en 0."""
    xstar = np.asarray(xstar, dtype=np.float64).reshape(1, -1)
    if xstar.shape[1] != model.dim:
        raise ContractViolation(f"x* tiene dimensión {xstar.shape[1]}, se esperaba {model.dim}")
    mean, variance = posterior_batch(model, xstar, prior_mean_at_xstar)
    return Posterior(mean=float(mean[0]), variance=float(variance[0]))


def log_marginal_likelihood(dataset: GPDataset, params: KernelParams) -> float:
    """−½(y−μ0)ᵀK⁻¹(y−μ0) − ½ log|K| − (n/2) log 2π, con log|K| = 2·Σ log diag(chol)."""
    if dataset.n == 0:
        raise ContractViolation("la verosimilitud marginal requiere al menos una observación")
    model = fit(dataset, params)
    residual = dataset.y - dataset.mu0
    quadratic = -0.5 * float(residual @ model.alpha_vec)
    log_det = -float(np.sum(np.log(np.diag(model.chol))))
    return quadratic + log_det - 0.5 * dataset.n * np.log(2.0 * np.pi)


def mse(predictions: Sequence[float], targets: Sequence[float]) -> float:
    """Error cuadrático medio n⁻¹ Σ (target_i − prediction_i)²."""
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.size == 0 or predictions.shape != targets.shape:
        raise ContractViolation(
            f"se requieren vectores no vacíos de igual longitud: {predictions.size} y {targets.size}"
        )
    return float(np.mean((targets - predictions) ** 2))


def read_dataset_csv(path: Union[str, Path]) -> GPDataset:
    """Lee un CSV con columnas theta_1..theta_d e y (cabecera obligatoria)."""
    frame = pd.read_csv(path)
    theta_columns = [c for c in frame.columns if c.startswith("theta_")]
    if "y" not in frame.columns or not theta_columns:
        raise ContractViolation(f"{path}: se esperaban columnas theta_1..theta_d e y, hay {list(frame.columns)}")
    theta_columns.sort(key=lambda c: int(c.split("_", 1)[1]))
    return GPDataset(frame[theta_columns].to_numpy(dtype=np.float64), frame["y"].to_numpy(dtype=np.float64))


def write_dataset_csv(dataset: GPDataset, path: Union[str, Path]) -> None:
    frame = pd.DataFrame(dataset.X, columns=[f"theta_{i + 1}" for i in range(dataset.dim)])
    frame["y"] = dataset.y
    frame.to_csv(path, index=False)
