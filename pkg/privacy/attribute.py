"""
Attribute inference: how much closer real samples are to synthetic data built with them than to
synthetic data built without them.
"""
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from generator.genomator import GenParams, generate_cohort, records_to_matrix
from hapdata.clusters import build_clusters, split_cohort
from hapdata.matrix import AlleleMatrix, nearest_distances
from markov import MarkovModel
from seeding import derive_seed

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["method", "option1", "option2", "in_distance", "out_distance", "difference",
                 "frontier_distance"]


@dataclass(frozen=True)
class AttrInferenceReport:
    """
    Attributes:
    - in_distance (float): Median normalised distance from each real sample to the nearest record of the
      synthetic set built with it.
    - out_distance (float): Same against the synthetic set built without it.
    - difference (float): out_distance - in_distance; may be negative.
    - parameters (dict): Snapshot of the generator settings.
    """
    in_distance: float
    out_distance: float
    difference: float
    parameters: dict = field(default_factory=dict)


def frontier_distance(report: AttrInferenceReport) -> float:
    """Euclidean distance of (in_distance, difference) from the ideal point (0, 0)."""
    return math.hypot(report.in_distance, report.difference)


def attr_inference_experiment(m: AlleleMatrix, generate: Callable[[AlleleMatrix, int], AlleleMatrix],
                              seed: int = 0, parameters: dict = None) -> AttrInferenceReport:
    """
    Split the cohort in two, synthesise from each half and compare nearest-record distances.

    Parameters:
    m (AlleleMatrix): The cohort, M >= 4.
    generate (callable): Maps (half, seed) to a synthetic matrix over the same sites.
    seed (int): Seed of the split and of both generator calls.
    parameters (dict): Generator settings echoed into the report.

    Returns:
    AttrInferenceReport
    """
    if m.n_samples < 4:
        raise ValueError(f"attribute inference needs at least 4 samples, got {m.n_samples}")
    halves = split_cohort(m, seed)
    synths = [generate(half, derive_seed(seed, "attr", h)) for h, half in enumerate(halves)]
    for synth in synths:
        if synth.n_sites != m.n_sites:
            raise ValueError(f"generator returned {synth.n_sites} sites, expected {m.n_sites}")

    inside, outside = [], []
    for h, half in enumerate(halves):
        own = synths[h].codes_like(half)
        other = synths[1 - h].codes_like(half)
        inside.append(nearest_distances(half.cells, own))
        outside.append(nearest_distances(half.cells, other))
    in_distance = float(np.median(np.concatenate(inside))) / m.n_sites
    out_distance = float(np.median(np.concatenate(outside))) / m.n_sites
    logger.info("attribute inference: in %.6f, out %.6f", in_distance, out_distance)
    return AttrInferenceReport(in_distance, out_distance, out_distance - in_distance, dict(parameters or {}))


def genomator_handle(n: int, z_max: float, count: int = None, clusters: int = None, threads: int = 1):
    """
    A generator callable producing ``count`` records (default: the half's size) per half.

    Raises ValueError when a half has fewer than ``n`` samples.
    """
    def generate(half: AlleleMatrix, seed: int) -> AlleleMatrix:
        if n > half.n_samples:
            raise ValueError(f"cluster size {n} exceeds the {half.n_samples} samples of a cohort half")
        records = count or half.n_samples
        plan = build_clusters(half, n, clusters or max(records, -(-half.n_samples // n)), seed)
        params = GenParams(n, z_max, seed, retries=3)
        return records_to_matrix(generate_cohort(half, plan, params, records, threads), half)
    return generate


def markov_handle(window: int, count: int = None):
    def generate(half: AlleleMatrix, seed: int) -> AlleleMatrix:
        records = MarkovModel(window).fit(half).generate(count or half.n_samples, seed)
        return records_to_matrix(records, half)
    return generate


def sweep_table(rows) -> pd.DataFrame:
    """
    One row per configuration.

    ``rows`` holds (method, option1, option2, AttrInferenceReport) tuples.
    """
    data = [{"method": method, "option1": option1, "option2": option2, "in_distance": r.in_distance,
             "out_distance": r.out_distance, "difference": r.difference, "frontier_distance": frontier_distance(r)}
            for method, option1, option2, r in rows]
    return pd.DataFrame(data, columns=SWEEP_COLUMNS)
