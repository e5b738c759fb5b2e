"""
Synthetic record generation: signatures, constraints, solve, decode.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from generator.constraints import add_diversity_constraints, emit_at_least_one, emit_pair_constraints
from generator.signatures import SignatureTable, build_signatures, map_variables
from hapdata.clusters import ClusterPlan, nearest_cluster
from hapdata.formats import HAP, VCF
from hapdata.matrix import AlleleMatrix
from satcore.dimacs import write_dimacs
from satcore.formula import Formula
from satcore.solver import SolverOptions, SolverTimeoutError, SolveStatus, solve
from seeding import derive_rng, derive_seed

logger = logging.getLogger(__name__)

CLUSTER_MODES = ("plan", "fresh")


class InfeasibleError(ValueError):
    """No record satisfies the constraints of a cluster under the given parameters."""

    def __init__(self, message: str, cluster_id=None):
        super().__init__(message)
        self.cluster_id = cluster_id


@dataclass(frozen=True)
class GenParams:
    """
    Generation parameters.

    Attributes:
    - n (int): Cluster size N.
    - z_max (float): Upper end of the uniform draw for the pair threshold z; <= 1 means z = 0.
    - seed (int): Seed from which the pair-threshold and solver seeds derive.
    - diversity_min_distance (int or None): Minimum Hamming distance from every diversity reference.
    - diverse_from_inputs (bool): Also keep the cluster members at that distance.
    - retries (int): Extra attempts with fresh z draws when a draw is infeasible.
    - solver (SolverOptions): Search settings.
    """
    n: int
    z_max: float = 0.0
    seed: int = 0
    diversity_min_distance: int = None
    diverse_from_inputs: bool = False
    retries: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"cluster size must be >= 1, got {self.n}")
        if self.z_max < 0:
            raise ValueError(f"z_max must be >= 0, got {self.z_max}")
        if self.diversity_min_distance is not None and self.diversity_min_distance < 0:
            raise ValueError(f"diversity distance must be >= 0, got {self.diversity_min_distance}")
        if self.retries < 0:
            raise ValueError(f"retries must be >= 0, got {self.retries}")

    def snapshot(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SyntheticRecord:
    """One token per site plus where it came from."""
    tokens: tuple
    provenance: dict = field(default_factory=dict, compare=False)


def decode(assignment, table: SignatureTable) -> tuple:
    """
    Read the token of every site from the truth of its positive-query literals.

    Raises:
    RuntimeError: If a site has zero or several true positive queries.
    """
    values = np.asarray(assignment, dtype=bool)
    literals = table.positive_literals()
    truth = np.where(literals > 0, values[np.abs(literals) - 1], ~values[np.abs(literals) - 1])
    truth[literals == 0] = False
    per_site = truth.sum(axis=1)
    bad = np.flatnonzero(per_site != 1)
    if bad.size:
        j = int(bad[0])
        raise RuntimeError(f"site {j} has {int(per_site[j])} true positive queries; expected exactly one")
    chosen = truth.argmax(axis=1)
    return tuple(table.site_alphabets[j][k] for j, k in enumerate(chosen))


def encode(tokens, table: SignatureTable) -> tuple:
    """
    The assignment whose decoding is ``tokens``: every query answered as the record answers it.

    Raises:
    ValueError: If a token is outside its site alphabet or two queries with the same signature are
        answered differently.
    """
    if len(tokens) != table.n_sites:
        raise ValueError(f"expected {table.n_sites} tokens, got {len(tokens)}")
    literals = table.positive_literals()
    values = [None] * table.n
    for j, token in enumerate(tokens):
        alphabet = table.site_alphabets[j]
        if token not in alphabet:
            raise ValueError(f"token {token!r} is not in the alphabet of site {j}")
        chosen = alphabet.index(token)
        for k in range(len(alphabet)):
            lit = int(literals[j, k])
            value = (k == chosen) == (lit > 0)
            var = abs(lit) - 1
            if values[var] is None:
                values[var] = value
            elif values[var] != value:
                raise ValueError(f"tokens answer signature x{var + 1} inconsistently at site {j}")
    return tuple(values)


def build_formula(table: SignatureTable, z_max: float, pair_seed: int, solver_seed: int,
                  others=(), min_distance: int = None) -> Formula:
    formula = Formula(table.n, decision_seed=solver_seed)
    emit_at_least_one(table, formula)
    emit_pair_constraints(table, z_max, pair_seed, formula)
    if min_distance and others:
        add_diversity_constraints(formula, table, others, min_distance)
    return formula


def generate_one(cluster: AlleleMatrix, params: GenParams, cluster_id=None, others=(),
                 dump_cnf=None) -> SyntheticRecord:
    """
    Generate one synthetic record from a cluster.

    Parameters:
    cluster (AlleleMatrix): The cluster view (its columns are the members).
    params (GenParams): Generation parameters.
    cluster_id: Identifier recorded in the provenance and in errors.
    others (sequence of token sequences): Diversity references, used when
        params.diversity_min_distance is set.
    dump_cnf (path): Optional path the formula is written to in DIMACS form.

    Returns:
    SyntheticRecord: The decoded record.

    Raises:
    InfeasibleError: If every attempt is unsatisfiable.
    SolverTimeoutError: If the conflict budget runs out.
    ValueError: If the diversity distance is not below the site count.
    """
    d = params.diversity_min_distance
    if d is not None and d >= cluster.n_sites:
        raise ValueError(f"diversity distance {d} must be below the site count {cluster.n_sites}")
    table = map_variables(build_signatures(cluster))
    others = list(others)
    if params.diverse_from_inputs and params.diversity_min_distance:
        others.extend(cluster.column(i) for i in range(cluster.n_samples))

    for attempt in range(params.retries + 1):
        pair_seed = derive_seed(params.seed, "pairs", attempt)
        solver_seed = derive_seed(params.seed, "solver", attempt)
        formula = build_formula(table, params.z_max, pair_seed, solver_seed, others,
                                params.diversity_min_distance)
        if dump_cnf is not None:
            write_dimacs(formula, dump_cnf)
        outcome = solve(formula, options=params.solver)
        if outcome.status == SolveStatus.TIMEOUT:
            raise SolverTimeoutError(f"cluster {cluster_id}: solver exhausted {outcome.conflicts} conflicts")
        if outcome.is_sat:
            tokens = decode(outcome.assignment, table)
            provenance = {
                "cluster_id": cluster_id,
                "members": [cluster.sample_ids[i] for i in table.members],
                "seed": params.seed,
                "attempt": attempt,
                "variables": table.n,
                "clauses": len(formula.clauses),
                "params": params.snapshot(),
            }
            return SyntheticRecord(tokens, provenance)
        logger.info("cluster %s: attempt %d unsatisfiable (z_max=%s)", cluster_id, attempt, params.z_max)

    raise InfeasibleError(
        f"cluster {cluster_id}: infeasible under parameters (N={params.n}, z_max={params.z_max}, "
        f"diversity={params.diversity_min_distance}); increase N or lower Z", cluster_id)


def _generate_task(task):
    cluster, params, cluster_id, dump = task
    return generate_one(cluster, params, cluster_id, dump_cnf=dump)


def dump_path(template, record: int, count: int):
    """The CNF dump path of one record: the template itself for a single record, else indexed."""
    if template is None:
        return None
    path = Path(template)
    return path if count == 1 else path.with_name(f"{path.stem}.{record}{path.suffix}")


def _pick_clusters(m: AlleleMatrix, plan: ClusterPlan, params: GenParams, count: int,
                   cluster_mode: str) -> list:
    picks = []
    for r in range(count):
        rng = derive_rng(params.seed, "cluster", r)
        if cluster_mode == "plan":
            cluster_id = int(rng.integers(len(plan)))
            members = plan.clusters[cluster_id]
        else:
            seed_sample = int(rng.integers(m.n_samples))
            members = nearest_cluster(m, seed_sample, params.n, rng)
            cluster_id = f"fresh{r}"
        picks.append((cluster_id, members))
    return picks


def generate_cohort(m: AlleleMatrix, plan: ClusterPlan, params: GenParams, count: int, threads: int = 1,
                    cluster_mode: str = "plan", dump_cnf=None) -> list:
    """
    Generate ``count`` records, each from a randomly chosen cluster.

    Record r uses the seed derive_seed(params.seed, "record", r), so the cohort does not depend on
    ``threads``. With a diversity distance, records are generated in order and each must also differ
    from all earlier records.

    Parameters:
    m (AlleleMatrix): The cohort.
    plan (ClusterPlan): Clusters to draw from in "plan" mode; may be None in "fresh" mode.
    params (GenParams): Generation parameters.
    count (int): Number of records, >= 1.
    threads (int): Worker processes; 1 runs in-process.
    cluster_mode (str): "plan" draws a cluster of the plan per record, "fresh" builds a new
        nearest-neighbour cluster around a random seed sample per record.
    dump_cnf (path): Optional DIMACS dump path; with several records each gets an indexed name.

    Returns:
    list of SyntheticRecord
    """
    if count < 1:
        raise ValueError(f"record count must be >= 1, got {count}")
    if cluster_mode not in CLUSTER_MODES:
        raise ValueError(f"unknown cluster mode {cluster_mode!r}; expected one of {CLUSTER_MODES}")
    if cluster_mode == "plan":
        if plan is None:
            raise ValueError("cluster mode 'plan' needs a ClusterPlan")
        if plan.n != params.n:
            raise ValueError(f"plan cluster size {plan.n} differs from N={params.n}")

    picks = _pick_clusters(m, plan, params, count, cluster_mode)
    tasks = [(m.subset(members), replace(params, seed=derive_seed(params.seed, "record", r)), cluster_id,
              dump_path(dump_cnf, r, count))
             for r, (cluster_id, members) in enumerate(picks)]
    logger.info("generating %d records (N=%d, z_max=%s, mode=%s)", count, params.n, params.z_max, cluster_mode)

    if params.diversity_min_distance:
        records = []
        for cluster, record_params, cluster_id, dump in tasks:
            others = [r.tokens for r in records]
            records.append(generate_one(cluster, record_params, cluster_id, others, dump))
        return records
    if threads > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_generate_task, tasks))
    return [_generate_task(task) for task in tasks]


def records_to_matrix(records, template: AlleleMatrix, fmt: str = HAP) -> AlleleMatrix:
    """
    Assemble records into a matrix over the template's sites and alphabets.

    Columns are named ``synth<i>``; for VCF output consecutive records become the two phases
    ``synth<i>_0`` and ``synth<i>_1`` of one sample.
    """
    if not records:
        raise ValueError("no records to assemble")
    if fmt == VCF:
        if len(records) % 2:
            raise ValueError("VCF output needs an even number of records (two phases per sample)")
        ids = [f"synth{i // 2}_{i % 2}" for i in range(len(records))]
    elif fmt == HAP:
        ids = [f"synth{i}" for i in range(len(records))]
    else:
        raise ValueError(f"unknown format {fmt!r}")
    cells = np.column_stack([template.encode(r.tokens) for r in records])
    return AlleleMatrix(cells, template.site_alphabets, ids, template.site_ids)
