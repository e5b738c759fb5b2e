"""
Exact membership posterior for desk-scale instances.

With a uniform prior over the size-N input sets C and a generator that outputs each of the |f(C)|
records feasible for C with equal probability, the probability that sample i was an input given
output O is 1 / (1 + zeta * R), where zeta = N_out / N_in counts the compatible sets without and with
i, and R is the ratio of the mean of 1/|f(C)| over sets without i to that over sets with i.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from generator.genomator import build_formula
from generator.signatures import build_signatures, map_variables
from hapdata.matrix import AlleleMatrix
from reverse.problem import build_reverse_constraints, enumerate_candidate_sets
from satcore.solver import enumerate_solutions

logger = logging.getLogger(__name__)

MAX_SAMPLES = 10
MAX_CLUSTER = 4
MAX_SITES = 8


@dataclass(frozen=True)
class PosteriorReport:
    """
    Attributes:
    - target (int): Sample whose membership is assessed.
    - zeta (float): N_out / N_in (inf when N_in is 0).
    - r (float): Inverse model count ratio (nan when either side is empty).
    - posterior (float): P(target was an input | output).
    - n_in (int), n_out (int): Compatible sets with and without the target.
    - model_counts (dict): |f(C)| per compatible set C.
    - no_support (bool): True when no compatible set contains the target.
    """
    target: int
    zeta: float
    r: float
    posterior: float
    n_in: int
    n_out: int
    model_counts: dict
    no_support: bool = False

    def to_dict(self) -> dict:
        return {
            "target": self.target, "zeta": self.zeta, "r": self.r, "posterior": self.posterior,
            "n_in": self.n_in, "n_out": self.n_out, "no_support": self.no_support,
            "model_counts": {" ".join(map(str, k)): v for k, v in self.model_counts.items()},
        }


def posterior_from_ratios(zeta: float, r: float) -> float:
    """1 / (1 + zeta * R), with zeta = 0 giving 1."""
    if zeta < 0:
        raise ValueError(f"zeta must be non-negative, got {zeta}")
    if zeta == 0:
        return 1.0
    if not r >= 0:
        raise ValueError(f"R must be non-negative, got {r}")
    return 1.0 / (1.0 + zeta * r)


def count_outputs(cluster: AlleleMatrix) -> int:
    """|f(C)|: the number of records the forward formula of ``cluster`` admits at z = 0."""
    table = map_variables(build_signatures(cluster))
    formula = build_formula(table, 0.0, 0, 0)
    limit = int(np.prod(cluster.alphabet_sizes.astype(np.float64))) + 1
    found = enumerate_solutions(formula, limit)
    if not found.exhausted:
        raise RuntimeError("forward model enumeration did not exhaust")
    return len(found.models)


def theorem1_posterior(synth, cohort: AlleleMatrix, target: int, n: int) -> PosteriorReport:
    """
    Posterior that ``target`` was among the N inputs of ``synth``, by exhaustive enumeration.

    Raises:
    ValueError: If the instance exceeds M <= 10, N <= 4, S <= 8 or the target index is invalid.
    """
    if cohort.n_samples > MAX_SAMPLES or n > MAX_CLUSTER or cohort.n_sites > MAX_SITES:
        raise ValueError(f"instance too large for exact evaluation (M={cohort.n_samples}, N={n}, "
                         f"S={cohort.n_sites}); limits are M<={MAX_SAMPLES}, N<={MAX_CLUSTER}, S<={MAX_SITES}")
    if not 0 <= target < cohort.n_samples:
        raise IndexError(f"target index {target} out of range for {cohort.n_samples} samples")

    problem = build_reverse_constraints(synth, cohort, n, 0.0)
    combos = enumerate_candidate_sets(problem, math.comb(cohort.n_samples, n) + 1)
    if not combos.exhausted:
        raise RuntimeError("candidate set enumeration did not exhaust")

    counts = {members: count_outputs(cohort.subset(members)) for members in combos.sets}
    inside = [1 / c for members, c in counts.items() if target in members]
    outside = [1 / c for members, c in counts.items() if target not in members]
    n_in, n_out = len(inside), len(outside)
    logger.debug("target %d: %d compatible sets with, %d without", target, n_in, n_out)

    if n_in == 0:
        return PosteriorReport(target, math.inf, math.nan, 0.0, n_in, n_out, counts, no_support=True)
    if n_out == 0:
        return PosteriorReport(target, 0.0, math.nan, 1.0, n_in, n_out, counts)
    zeta = n_out / n_in
    r = float(np.mean(outside) / np.mean(inside))
    return PosteriorReport(target, zeta, r, posterior_from_ratios(zeta, r), n_in, n_out, counts)
