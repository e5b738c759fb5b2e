"""
Reconstruction of plausible input sets for a witnessed synthetic record.

Candidate variable x_{i+1} says cohort sample i was in the generating cluster. Every query the record
answers False yields a half-clause: the samples that answer it False too. For each pair of half-clauses
the forward pair clause was absent from the record's formula, so the cluster held at least z + 1
samples answering both queries False; this becomes an at-least-(z + 1) constraint over the intersection.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from generator.constraints import draw_thresholds
from hapdata.matrix import AlleleMatrix
from satcore.formula import Formula
from satcore.solver import SolverOptions, SolverTimeoutError, SolveStatus, enumerate_solutions, solve
from seeding import derive_seed

logger = logging.getLogger(__name__)


class ReverseInfeasibleError(ValueError):
    """The record cannot stem from any size-N subset of the cohort under the drawn thresholds."""

    def __init__(self, message: str, diagnostics: dict = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class CandidateSet:
    """
    Outcome of one reconstruction trial.

    Attributes:
    - members (tuple of int): Cohort indices of the reconstructed cluster, empty when infeasible.
    - trial (int): Trial number.
    - feasible (bool): Whether the trial's constraints were satisfiable.
    - diagnostics (dict): Why an infeasible trial failed, when its pair constraints could not hold.
    """
    members: tuple
    trial: int
    feasible: bool = True
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CandidateEnumeration:
    sets: list
    exhausted: bool


@dataclass
class ReverseProblem:
    """
    Attributes:
    - cohort (AlleleMatrix): The candidate inputs.
    - synth (tuple of str): The witnessed record.
    - n (int): Cluster size N enforced by an exactly-N constraint.
    - z_max (float): Upper end of the threshold draws.
    - half_clauses (list of int): Unique half-clauses as bitmasks over cohort samples (bit i is sample i).
    - solver (SolverOptions): Search settings for every trial.
    """
    cohort: AlleleMatrix
    synth: tuple
    n: int
    z_max: float
    half_clauses: list
    solver: SolverOptions = field(default_factory=SolverOptions)
    _fixed: Formula = field(default=None, repr=False)

    @property
    def n_vars(self) -> int:
        return self.cohort.n_samples


def mask_members(mask: int) -> list:
    """Sample indices set in ``mask``."""
    members = []
    i = 0
    while mask:
        if mask & 1:
            members.append(i)
        mask >>= 1
        i += 1
    return members


def collect_half_clauses(synth, cohort: AlleleMatrix) -> list:
    """Unique half-clauses of every query ``synth`` answers False, sorted by size then value."""
    if len(synth) != cohort.n_sites:
        raise ValueError(f"record has {len(synth)} sites, cohort has {cohort.n_sites}")
    keys = set()
    for j, token in enumerate(synth):
        t = cohort.token_id(j, token)
        row = cohort.cells[j]
        for v in range(len(cohort.site_alphabets[j])):
            false_members = row == t if v == t else row != v
            keys.add(np.packbits(false_members, bitorder="little").tobytes())
    masks = [int.from_bytes(k, "little") for k in keys]
    return sorted(masks, key=lambda m: (m.bit_count(), m))


def eliminate_subsumed(constraints: dict) -> list:
    """
    Drop at-least constraints implied by another one.

    ``constraints`` maps a literal set (bitmask) to its bound; A implies B when A's set is within B's
    and A's bound is at least B's.
    """
    ordered = sorted(constraints.items(), key=lambda item: (item[0].bit_count(), item[0]))
    kept = []
    for mask, k in ordered:
        if not any(k_a >= k and mask_a & ~mask == 0 for mask_a, k_a in kept):
            kept.append((mask, k))
    return kept


def pair_constraints(half_clauses: list, z_max: float, seed: int) -> list:
    """
    At-least-(z + 1) constraints over every pairwise intersection, self-pairs included, after
    subsumption elimination.

    Raises:
    ReverseInfeasibleError: If some intersection has fewer than z + 1 samples.
    """
    count = len(half_clauses)
    constraints = {}
    for i in range(count):
        if z_max > 1:
            z = draw_thresholds(z_max, count - i, np.random.default_rng([seed, i]))
        else:
            z = np.zeros(count - i, dtype=np.int64)
        a = half_clauses[i]
        for offset in range(count - i):
            inter = a & half_clauses[i + offset]
            k = int(z[offset]) + 1
            if inter.bit_count() < k:
                raise ReverseInfeasibleError(
                    f"intersection of half-clauses {i} and {i + offset} has {inter.bit_count()} samples, "
                    f"needs {k}", {"pair": (i, i + offset), "size": inter.bit_count(), "needed": k})
            if constraints.get(inter, 0) < k:
                constraints[inter] = k
    return eliminate_subsumed(constraints)


def reverse_formula(problem: ReverseProblem, pair_seed: int, solver_seed: int) -> Formula:
    formula = Formula(problem.n_vars, decision_seed=solver_seed)
    for mask, k in pair_constraints(problem.half_clauses, problem.z_max, pair_seed):
        literals = [i + 1 for i in mask_members(mask)]
        if k == 1:
            formula.add_clause(literals)
        else:
            formula.at_least(literals, k)
    formula.exactly(range(1, problem.n_vars + 1), problem.n)
    return formula


def build_reverse_constraints(synth, cohort: AlleleMatrix, n: int, z_max: float = 0.0,
                              solver: SolverOptions = None) -> ReverseProblem:
    """
    Collect the half-clauses of ``synth`` against ``cohort``.

    The pairwise constraints depend on the threshold draws and are built per trial; with z_max <= 1
    they are fixed and built once.

    Raises:
    ValueError: If n is outside 1..M or a token is missing from its site alphabet.
    """
    if not 1 <= n <= cohort.n_samples:
        raise ValueError(f"cluster size {n} must be between 1 and the sample count {cohort.n_samples}")
    if z_max < 0:
        raise ValueError(f"z_max must be >= 0, got {z_max}")
    synth = tuple(synth)
    half_clauses = collect_half_clauses(synth, cohort)
    logger.debug("%d unique half-clauses over %d samples", len(half_clauses), cohort.n_samples)
    return ReverseProblem(cohort, synth, n, z_max, half_clauses, solver or SolverOptions())


def trial_formula(problem: ReverseProblem, trial: int, seed: int) -> Formula:
    """The formula of one trial; raises ReverseInfeasibleError when its draws are infeasible."""
    solver_seed = derive_seed(seed, "reverse-solver", trial)
    if problem.z_max <= 1:
        if problem._fixed is None:
            problem._fixed = reverse_formula(problem, 0, 0)
        formula = problem._fixed.copy()
        formula.decision_seed = solver_seed
        return formula
    return reverse_formula(problem, derive_seed(seed, "reverse-pairs", trial), solver_seed)


def run_trial(problem: ReverseProblem, trial: int, seed: int) -> CandidateSet:
    try:
        formula = trial_formula(problem, trial, seed)
    except ReverseInfeasibleError as e:
        logger.debug("trial %d infeasible: %s", trial, e)
        return CandidateSet((), trial, False, e.diagnostics)
    outcome = solve(formula, options=problem.solver)
    if outcome.status == SolveStatus.TIMEOUT:
        raise SolverTimeoutError(f"reverse trial {trial} exhausted {outcome.conflicts} conflicts")
    if not outcome.is_sat:
        return CandidateSet((), trial, False)
    return CandidateSet(tuple(i for i, value in enumerate(outcome.assignment) if value), trial)


def _trial_task(task):
    return run_trial(*task)


def sample_candidate_sets(problem: ReverseProblem, trials: int, seed: int = 0, threads: int = 1) -> list:
    """
    Solve ``trials`` independent reconstructions with fresh draws and solver seeds.

    Returns:
    list of CandidateSet: One per trial, infeasible trials included with feasible=False.

    Raises:
    ReverseInfeasibleError: If every trial is infeasible.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tasks = [(problem, t, seed) for t in range(trials)]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            sets = list(pool.map(_trial_task, tasks))
    else:
        sets = [_trial_task(task) for task in tasks]
    feasible = sum(1 for s in sets if s.feasible)
    logger.info("reverse: %d of %d trials feasible", feasible, trials)
    if not feasible:
        first = next((s.diagnostics for s in sets if s.diagnostics), {})
        raise ReverseInfeasibleError(f"all {trials} trials infeasible", {**first, "trials": trials, "z_max": problem.z_max})
    return sets


def enumerate_candidate_sets(problem: ReverseProblem, limit: int, seed: int = 0) -> CandidateEnumeration:
    """
    Distinct feasible sets under the first trial's draws, up to ``limit``.

    An infeasible problem yields no sets and counts as exhausted.
    """
    try:
        formula = trial_formula(problem, 0, seed)
    except ReverseInfeasibleError:
        return CandidateEnumeration([], True)
    found = enumerate_solutions(formula, limit, options=problem.solver)
    sets = [tuple(i for i, value in enumerate(model) if value) for model in found.models]
    return CandidateEnumeration(sorted(sets), found.exhausted)
