"""
Exposure of cohort samples: how often a sample appears in every reconstructed input set.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from generator.genomator import GenParams, InfeasibleError, generate_one
from hapdata.matrix import AlleleMatrix
from reverse.problem import ReverseInfeasibleError, build_reverse_constraints, sample_candidate_sets
from seeding import derive_rng, derive_seed

logger = logging.getLogger(__name__)


def wilson_interval(successes: int, trials: int, confidence: float = 0.9) -> tuple:
    """
    Wilson score interval for a binomial proportion.

    Parameters:
    successes (int): Number of events.
    trials (int): Number of trials, >= 1.
    confidence (float): Two-sided confidence level in (0, 1).

    Returns:
    tuple: (low, high) bounds within [0, 1].
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in 0..{trials}, got {successes}")
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denominator = 1 + z ** 2 / trials
    centre = (p + z ** 2 / (2 * trials)) / denominator
    half_width = z * np.sqrt(p * (1 - p) / trials + z ** 2 / (4 * trials ** 2)) / denominator
    return max(0.0, centre - half_width), min(1.0, centre + half_width)


@dataclass(frozen=True)
class ExposureReport:
    """
    Attributes:
    - frequencies (pd.Series): Share of feasible trials each sample appears in, indexed by sample id.
    - exposed (tuple of int): Samples present in every feasible set.
    - iterations (int): Feasible trials the frequencies are taken over.
    - trials (int): All trials, infeasible ones included.
    - probability (float): Exposed share of a reconstructed set's N members.
    - interval (tuple): 90% Wilson interval of ``probability``.
    """
    frequencies: pd.Series
    exposed: tuple
    iterations: int
    trials: int
    probability: float
    interval: tuple

    def to_dict(self) -> dict:
        return {
            "frequencies": {k: float(v) for k, v in self.frequencies.items()},
            "exposed": list(self.exposed),
            "iterations": self.iterations,
            "trials": self.trials,
            "probability": self.probability,
            "interval": list(self.interval),
        }


def exposure_report(sets, n_samples: int, sample_ids=None, confidence: float = 0.9) -> ExposureReport:
    """
    Summarise candidate sets into per-sample frequencies and the exposed samples.

    Raises:
    ValueError: If no set is feasible.
    """
    feasible = [s for s in sets if s.feasible]
    if not feasible:
        raise ValueError("exposure needs at least one feasible candidate set")
    counts = np.zeros(n_samples, dtype=np.int64)
    for s in feasible:
        counts[list(s.members)] += 1
    frequencies = counts / len(feasible)
    exposed = tuple(int(i) for i in np.flatnonzero(counts == len(feasible)))
    size = len(feasible[0].members)
    index = list(sample_ids) if sample_ids is not None else list(range(n_samples))
    return ExposureReport(pd.Series(frequencies, index=index, name="frequency"), exposed, len(feasible),
                          len(sets), len(exposed) / size, wilson_interval(len(exposed), size, confidence))


@dataclass(frozen=True)
class ExposureExperiment:
    """
    Attributes:
    - table (pd.DataFrame): One row per repetition.
    - exposed (int): Input individuals found exposed over all repetitions.
    - total (int): Input individuals over all repetitions (repetitions x N).
    - rate (float): exposed / total.
    - interval (tuple): Wilson interval of ``rate``.
    """
    table: pd.DataFrame
    exposed: int
    total: int
    rate: float
    interval: tuple


def exposure_experiment(cohort: AlleleMatrix, n: int, z_max: float, repetitions: int, trials: int,
                        sites: int = None, seed: int = 0, confidence: float = 0.9,
                        threads: int = 1) -> ExposureExperiment:
    """
    Repeatedly generate one record from N random individuals over G random sites, reconstruct its
    inputs and count the individuals that are exposed.

    Parameters:
    cohort (AlleleMatrix): The cohort.
    n (int): Individuals per repetition (cluster size N).
    z_max (float): Threshold draw range for both generation and reconstruction.
    repetitions (int): Number of repetitions, >= 1.
    trials (int): Reconstruction trials per repetition.
    sites (int): Sites G per repetition; None uses all sites.
    seed (int): Master seed.
    confidence (float): Wilson interval level.
    threads (int): Worker processes for the reconstruction trials.

    Returns:
    ExposureExperiment: Per-repetition table and the pooled exposure rate.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    g = cohort.n_sites if sites is None else sites
    if not 1 <= g <= cohort.n_sites:
        raise ValueError(f"site count {g} must be between 1 and {cohort.n_sites}")
    if not 1 <= n <= cohort.n_samples:
        raise ValueError(f"N={n} must be between 1 and the sample count {cohort.n_samples}")

    rows = []
    for r in range(repetitions):
        rng = derive_rng(seed, "exposure", r)
        chosen_sites = np.sort(rng.choice(cohort.n_sites, size=g, replace=False))
        individuals = np.sort(rng.choice(cohort.n_samples, size=n, replace=False))
        view = cohort.select_sites(chosen_sites)
        row = {"repetition": r, "individuals": " ".join(view.sample_ids[i] for i in individuals),
               "feasible_trials": 0, "exposed_inputs": 0, "exposed_others": 0}
        try:
            params = GenParams(n, z_max, derive_seed(seed, "exposure-gen", r), retries=3)
            record = generate_one(view.subset(individuals), params, cluster_id=r)
            problem = build_reverse_constraints(record.tokens, view, n, z_max)
            sets = sample_candidate_sets(problem, trials, derive_seed(seed, "exposure-reverse", r), threads)
        except (InfeasibleError, ReverseInfeasibleError) as e:
            logger.warning("repetition %d skipped: %s", r, e)
            rows.append(row)
            continue
        report = exposure_report(sets, view.n_samples)
        inputs = set(int(i) for i in individuals)
        row["feasible_trials"] = report.iterations
        row["exposed_inputs"] = sum(1 for i in report.exposed if i in inputs)
        row["exposed_others"] = sum(1 for i in report.exposed if i not in inputs)
        rows.append(row)

    table = pd.DataFrame(rows)
    exposed = int(table["exposed_inputs"].sum())
    total = repetitions * n
    logger.info("exposure: %d of %d input individuals exposed", exposed, total)
    return ExposureExperiment(table, exposed, total, exposed / total, wilson_interval(exposed, total, confidence))
