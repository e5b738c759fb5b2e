import logging
from dataclasses import asdict, dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WassersteinReport:
    """
    Attributes:
    - distance (float): Mean 1-D 2-Wasserstein distance over the projection directions.
    - num_projections (int): Directions averaged over.
    - seed (int): Seed of the directions.
    - dimension (int): Dimension of the points.
    - percent_error (float): distance / dimension * 100.
    """
    distance: float
    num_projections: int
    seed: int
    dimension: int
    percent_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def wasserstein_1d(a: np.ndarray, b: np.ndarray) -> float:
    """
    Exact 2-Wasserstein distance between two equally weighted empirical distributions on the line.

    The quantile functions are step functions; the distance integrates their squared difference over
    the merged breakpoints, so unequal sample sizes need no resampling.
    """
    a, b = np.sort(np.asarray(a, dtype=np.float64)), np.sort(np.asarray(b, dtype=np.float64))
    if not len(a) or not len(b):
        raise ValueError("both point sets must be non-empty")
    if len(a) == len(b):
        return float(np.sqrt(np.mean((a - b) ** 2)))
    breaks = np.union1d(np.arange(1, len(a) + 1) / len(a), np.arange(1, len(b) + 1) / len(b))
    widths = np.diff(breaks, prepend=0.0)
    mids = breaks - widths / 2
    qa = a[np.minimum((mids * len(a)).astype(np.int64), len(a) - 1)]
    qb = b[np.minimum((mids * len(b)).astype(np.int64), len(b) - 1)]
    return float(np.sqrt(np.sum(widths * (qa - qb) ** 2)))


def random_directions(dimension: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` seeded unit vectors, one per row."""
    directions = np.random.default_rng(seed).standard_normal((count, dimension))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def sliced_wasserstein(x, y, num_projections: int = 50, seed: int = 0, directions=None) -> WassersteinReport:
    """
    Average 1-D 2-Wasserstein distance between the projections of two point sets.

    Parameters:
    x, y (array-like): Point sets with one point per row and the same dimension.
    num_projections (int): Number of random directions.
    seed (int): Seed of the directions.
    directions (array-like): Explicit directions (rows, normalised here) replacing the random ones.

    Returns:
    WassersteinReport

    Raises:
    ValueError: On empty sets or a dimension mismatch.
    """
    x, y = np.atleast_2d(np.asarray(x, dtype=np.float64)), np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("both point sets must be non-empty")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    dimension = x.shape[1]
    if directions is None:
        if num_projections < 1:
            raise ValueError(f"num_projections must be >= 1, got {num_projections}")
        directions = random_directions(dimension, num_projections, seed)
    else:
        directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    px, py = x @ directions.T, y @ directions.T
    distance = float(np.mean([wasserstein_1d(px[:, i], py[:, i]) for i in range(len(directions))]))
    logger.debug("sliced Wasserstein %.6g over %d directions", distance, len(directions))
    return WassersteinReport(distance, len(directions), seed, dimension, distance / dimension * 100)
