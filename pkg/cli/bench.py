import logging
import resource
import sys
import time

import numpy as np
import pandas as pd

from generator.genomator import GenParams, generate_one
from hapdata.formats import HAP, parse_matrix, write_matrix
from hapdata.matrix import AlleleMatrix
from seeding import derive_rng, derive_seed

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["sites", "seconds", "load_seconds", "peak_rss_mb", "variables", "status"]


def random_cohort(sites: int, samples: int, seed: int = 0, alphabet=("0", "1")) -> AlleleMatrix:
    """A uniformly random cohort over a shared alphabet."""
    cells = derive_rng(seed, "cohort", sites).integers(len(alphabet), size=(sites, samples), dtype=np.int32)
    return AlleleMatrix(cells, [tuple(alphabet)] * sites, [f"s{i}" for i in range(samples)],
                        [f"site{j + 1}" for j in range(sites)])


def peak_rss_mb() -> float:
    """Peak resident set size of this process so far."""
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return peak / (1024 * 1024) if sys.platform == "darwin" else peak / 1024


def site_ladder(start: int, steps: int) -> list:
    """``steps`` site counts doubling from ``start``."""
    if start < 1 or steps < 1:
        raise ValueError(f"ladder needs start >= 1 and steps >= 1, got {start}, {steps}")
    return [start * 2 ** i for i in range(steps)]


def run_ladder(sites, samples: int, n: int, z_max: float = 0.0, seed: int = 0) -> pd.DataFrame:
    """
    Time the generation of one record over each site count of the ladder.

    The cohort is serialised and parsed once per step; that load time is reported apart from the
    generation time, which covers signatures, constraints, solving and decoding only.

    Parameters:
    sites (iterable of int): Site counts.
    samples (int): Cohort size; the cluster is its first ``n`` samples.
    n (int): Cluster size N.
    z_max (float): Threshold draw range.
    seed (int): Master seed.

    Returns:
    pd.DataFrame: One row per step with sites, seconds, load_seconds, peak_rss_mb, variables and
    status; a failed step keeps its row with the error as status.
    """
    if not 1 <= n <= samples:
        raise ValueError(f"N={n} must be between 1 and the sample count {samples}")
    table = pd.DataFrame(columns=BENCH_COLUMNS)
    for step, s in enumerate(sites):
        cohort = random_cohort(s, samples, seed)
        started = time.perf_counter()
        cohort = parse_matrix(write_matrix(cohort, HAP), HAP)
        load_seconds = time.perf_counter() - started
        cluster = cohort.subset(range(n))
        params = GenParams(n, z_max, derive_seed(seed, "bench", step))
        try:
            started = time.perf_counter()
            record = generate_one(cluster, params, cluster_id=step)
            seconds = time.perf_counter() - started
            table.loc[step] = [s, round(seconds, 4), round(load_seconds, 4), round(peak_rss_mb(), 1),
                               record.provenance["variables"], "ok"]
        except (ValueError, RuntimeError) as e:
            logger.warning("bench step with %d sites failed: %s", s, e)
            table.loc[step] = [s, np.nan, round(load_seconds, 4), round(peak_rss_mb(), 1), np.nan, str(e)]
        logger.info("bench: %d sites in %s s", s, table.loc[step, "seconds"])
    return table
