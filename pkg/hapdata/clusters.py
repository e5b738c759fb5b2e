import logging
from dataclasses import dataclass

import numpy as np

from hapdata.matrix import AlleleMatrix, hamming_to_all

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterPlan:
    """
    Overlapping clusters of similar samples.

    Attributes:
    - clusters (tuple of tuple of int): Member indices per cluster; the seed sample comes first.
    - usage_counts (tuple of int): Number of clusters each sample belongs to.
    - n (int): Cluster size N.
    - seed (int): RNG seed the plan was built with.
    - seed_samples (tuple of int): Seed sample of each cluster.
    """
    clusters: tuple
    usage_counts: tuple
    n: int
    seed: int
    seed_samples: tuple

    def __len__(self):
        return len(self.clusters)


def nearest_cluster(m: AlleleMatrix, seed_sample: int, n: int, rng: np.random.Generator = None,
                    usage: np.ndarray = None) -> tuple:
    """
    The seed sample plus its n-1 nearest neighbours by Hamming distance.

    Ties between equally distant samples are broken at random. When ``usage`` is given, less used
    samples come before more used ones whatever their distance.
    """
    if not 1 <= n <= m.n_samples:
        raise ValueError(f"cluster size {n} must be between 1 and the sample count {m.n_samples}")
    rng = rng if rng is not None else np.random.default_rng(0)
    distances = hamming_to_all(seed_sample, m)
    tie_break = rng.random(m.n_samples)
    keys = (tie_break, distances) if usage is None else (tie_break, distances, usage)
    ranked = np.lexsort(keys)
    ranked = ranked[ranked != seed_sample]
    return (int(seed_sample),) + tuple(int(i) for i in ranked[:n - 1])


def build_clusters(m: AlleleMatrix, n: int, k: int, seed: int = 0) -> ClusterPlan:
    """
    Build k overlapping clusters of size n with balanced sample usage.

    Seeds are drawn without replacement in rounds over seeded permutations of the samples, skipping
    samples used more often than the least used one. Each cluster takes the seed's nearest
    neighbours among the least used samples, topped up from the next usage level. Usage counts
    therefore never differ by more than 1, and every sample is covered once k * n >= M.

    Parameters:
    m (AlleleMatrix): The cohort.
    n (int): Cluster size N, 1 <= n <= M.
    k (int): Number of clusters, k >= 1.
    seed (int): RNG seed.

    Returns:
    ClusterPlan: The clusters with their usage counts.
    """
    n_samples = m.n_samples
    if not 1 <= n <= n_samples:
        raise ValueError(f"cluster size {n} must be between 1 and the sample count {n_samples}")
    if k < 1:
        raise ValueError(f"cluster count must be at least 1, got {k}")

    rng = np.random.default_rng(seed)
    usage = np.zeros(n_samples, dtype=np.int64)
    clusters, seeds = [], []
    order = []
    while len(clusters) < k:
        if not order:
            order = [int(s) for s in rng.permutation(n_samples)]
        low = usage.min()
        pick = next((i for i, s in enumerate(order) if usage[s] == low), None)
        if pick is None:
            order = []
            continue
        s = order.pop(pick)
        cluster = nearest_cluster(m, s, n, rng, usage=usage)
        usage[list(cluster)] += 1
        clusters.append(cluster)
        seeds.append(s)

    logger.debug("built %d clusters of size %d; usage min %d max %d", k, n, usage.min(), usage.max())
    return ClusterPlan(tuple(clusters), tuple(int(u) for u in usage), n, seed, tuple(seeds))


def split_indices(n_samples: int, seed: int = 0) -> tuple:
    """Seeded split of range(n_samples) into sorted halves of sizes floor(M/2) and ceil(M/2)."""
    if n_samples < 2:
        raise ValueError(f"splitting needs at least 2 samples, got {n_samples}")
    perm = np.random.default_rng(seed).permutation(n_samples)
    half = n_samples // 2
    return tuple(sorted(int(i) for i in perm[:half])), tuple(sorted(int(i) for i in perm[half:]))


def split_cohort(m: AlleleMatrix, seed: int = 0) -> tuple:
    """
    Split the cohort into two disjoint random halves.

    Returns:
    tuple: (AlleleMatrix, AlleleMatrix) of sizes floor(M/2) and ceil(M/2).
    """
    first, second = split_indices(m.n_samples, seed)
    return m.subset(first), m.subset(second)
