import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from hapdata.matrix import AlleleMatrix
from metrics.ld import dosage_matrix

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Orthogonal iteration did not reach the residual tolerance within its iteration budget."""


@dataclass(frozen=True)
class PcaModel:
    """
    Principal components of a point set.

    Attributes:
    - mean (np.ndarray): Column means of the fitted data.
    - components (np.ndarray): (k, d) orthonormal rows, largest-magnitude entry of each positive.
    - explained_variance (np.ndarray): Eigenvalue of each component.
    - explained_variance_ratio (np.ndarray): Eigenvalues over the total variance.
    - iterations (int): Orthogonal iteration steps taken.
    """
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    iterations: int

    @property
    def k(self) -> int:
        return self.components.shape[0]


def as_points(data) -> np.ndarray:
    """Rows are points: a matrix's samples as minor-allele dosage vectors, or an array as given."""
    if isinstance(data, AlleleMatrix):
        return dosage_matrix(data).T
    points = np.asarray(data, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must form a two-dimensional array, got shape {points.shape}")
    return points


def pca_fit(data, k: int, seed: int = 0, tol: float = 1e-8, max_iter: int = 10000) -> PcaModel:
    """
    Top-k eigenpairs of the sample covariance by orthogonal iteration with Rayleigh-Ritz extraction.

    Parameters:
    data (AlleleMatrix or array-like): Points as rows; matrices are dosage-encoded per sample.
    k (int): Number of components, 1 <= k <= min(points, dimension).
    seed (int): Seed of the starting block.
    tol (float): Residual tolerance ||C v - lambda v|| relative to max(1, lambda_1).
    max_iter (int): Iteration budget.

    Returns:
    PcaModel

    Raises:
    ValueError: If k is out of range.
    ConvergenceError: If the budget runs out.
    """
    x = as_points(data)
    n_points, dim = x.shape
    if not 1 <= k <= min(n_points, dim):
        raise ValueError(f"k={k} must be between 1 and min(points, dimension)={min(n_points, dim)}")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / max(n_points - 1, 1)

    block = min(dim, k + 5)
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((dim, block)))
    scale = 1.0
    for iteration in range(1, max_iter + 1):
        q, _ = np.linalg.qr(cov @ q)
        values, vectors = np.linalg.eigh(q.T @ cov @ q)
        order = np.argsort(values)[::-1]
        values, q = values[order], q @ vectors[:, order]
        scale = max(1.0, abs(values[0]))
        residual = np.linalg.norm(cov @ q[:, :k] - q[:, :k] * values[:k], axis=0).max()
        if residual <= tol * scale:
            break
    else:
        raise ConvergenceError(f"orthogonal iteration stopped at residual {residual:.3g} after {max_iter} steps")

    components = q[:, :k].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    variance = np.clip(values[:k], 0.0, None)
    total = np.trace(cov)
    ratio = variance / total if total > 0 else np.zeros(k)
    logger.debug("PCA converged in %d iterations; explained ratio %s", iteration, np.round(ratio, 4))
    return PcaModel(mean, components, variance, ratio, iteration)


def pca_project(model: PcaModel, data) -> np.ndarray:
    """Coordinates of the rows of ``data`` on the model's components."""
    x = as_points(data)
    if x.shape[1] != model.mean.shape[0]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {model.mean.shape[0]}")
    return (x - model.mean) @ model.components.T


def coordinates_table(model: PcaModel, data, labels=None, group: str = None) -> pd.DataFrame:
    """Long-format coordinates (one row per point, one PC column per component) for external plotting."""
    coords = pca_project(model, data)
    table = pd.DataFrame(coords, columns=[f"PC{i + 1}" for i in range(model.k)])
    if labels is None and isinstance(data, AlleleMatrix):
        labels = data.sample_ids
    if labels is not None:
        table.insert(0, "sample", list(labels))
    if group is not None:
        table.insert(0, "group", group)
    return table
