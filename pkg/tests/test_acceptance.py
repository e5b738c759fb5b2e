"""Oracle checks over many random instances; deselect with ``-m "not slow"``."""
import numpy as np
import pytest

from cli.bench import random_cohort, run_ladder
from conftest import all_outputs, brute_force_posterior, forward_feasible, reverse_feasible_sets, toy_cohort
from generator.genomator import GenParams, generate_cohort, generate_one, records_to_matrix
from generator.signatures import build_signatures, map_variables
from hapdata.clusters import build_clusters
from hapdata.matrix import AlleleMatrix
from markov import MarkovModel
from metrics.ld import ld_square_error
from privacy.ktuples import TupleClass, revelation_rates, sample_ktuples, sign_test
from reverse.exposure import exposure_report
from reverse.posterior import theorem1_posterior
from reverse.problem import (ReverseInfeasibleError, build_reverse_constraints, enumerate_candidate_sets,
                             sample_candidate_sets)

pytestmark = pytest.mark.slow


def draw_instance(seed: int, max_samples: int, max_sites: int, n: int = None, samples: int = None):
    rng = np.random.default_rng(seed)
    samples = samples or int(rng.integers(n or 1, max_samples + 1))
    m = random_cohort(int(rng.integers(1, max_sites + 1)), samples, seed)
    members = tuple(sorted(int(i) for i in rng.choice(samples, size=n or int(rng.integers(1, samples + 1)),
                                                      replace=False)))
    return m, members


def test_generated_records_are_feasible():
    for seed in range(200):
        m, members = draw_instance(seed, 5, 6)
        record = generate_one(m.subset(members), GenParams(len(members), seed=seed)).tokens
        assert forward_feasible(record, m, members), (seed, members)


@pytest.mark.parametrize("m, members", [
    (toy_cohort(), (0, 3)),
    (random_cohort(6, 3, seed=11), (0, 1, 2)),
])
def test_every_feasible_record_is_reached(m, members):
    cluster = m.subset(members)
    reached = {generate_one(cluster, GenParams(len(members), seed=s)).tokens for s in range(500)}
    assert reached == set(all_outputs(m, members))


def test_variable_count_is_bounded_by_cluster_size():
    for seed in range(1000):
        m = random_cohort(200, 10, seed, alphabet=("A", "T", "G", "C"))
        table = map_variables(build_signatures(m))
        assert len(table.codes) <= 1024
        assert table.n <= 512


def test_candidate_sets_match_subset_search():
    for seed in range(50):
        m, members = draw_instance(seed, 6, 6, n=3, samples=6)
        record = generate_one(m.subset(members), GenParams(3, seed=seed)).tokens
        found = enumerate_candidate_sets(build_reverse_constraints(record, m, 3), 21)
        assert found.exhausted
        assert found.sets == reverse_feasible_sets(record, m, 3)
        assert members in found.sets


def test_posterior_matches_joint_enumeration():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        m, members = draw_instance(seed, 8, 6, n=n)
        record = generate_one(m.subset(members), GenParams(n, seed=seed)).tokens
        target = int(rng.integers(m.n_samples))
        report = theorem1_posterior(record, m, target, n)
        assert report.posterior == pytest.approx(brute_force_posterior(record, m, target, n), abs=1e-9)


def test_generation_time_grows_near_linearly():
    run_ladder([1000], 10, 10)
    table = run_ladder([10_000, 160_000], 10, 10)
    assert list(table["status"]) == ["ok", "ok"]
    small, large = table["seconds"]
    assert large < 30 * small
    assert large < 120


def founder_cohort(seed: int, founders: int = 6, per_founder: int = 10, sites: int = 120):
    """
    Groups of samples copied from random founders, each sample with two private mutations.

    Returns the cohort and the sample indices of every group.
    """
    rng = np.random.default_rng(seed)
    columns, groups = [], []
    for f in range(founders):
        founder = rng.integers(2, size=sites)
        mutated = rng.permutation(sites)[:2 * per_founder].reshape(per_founder, 2)
        groups.append(tuple(range(f * per_founder, (f + 1) * per_founder)))
        for flips in mutated:
            column = founder.copy()
            column[flips] ^= 1
            columns.append(column)
    rows = np.column_stack(columns)
    return AlleleMatrix.from_rows([[str(t) for t in row] for row in rows]), groups


def group_records(m, groups, z_max: float, seed: int, per_group: int = 5):
    records = []
    for g, group in enumerate(groups):
        for r in range(per_group):
            params = GenParams(len(group), z_max, seed * 1000 + g * per_group + r, retries=3)
            records.append(generate_one(m.subset(group), params, cluster_id=g))
    return records_to_matrix(records, m)


def exposed_inputs(m, group, z_max: float, seed: int, trials: int = 10) -> int:
    record = generate_one(m.subset(group), GenParams(len(group), z_max, seed, retries=3))
    problem = build_reverse_constraints(record.tokens, m, len(group), z_max)
    try:
        sets = sample_candidate_sets(problem, trials, seed)
    except ReverseInfeasibleError:
        return 0
    report = exposure_report(sets, m.n_samples)
    return sum(1 for i in report.exposed if i in group)


def test_stronger_thresholds_reveal_fewer_private_quadruplets():
    low_z, high_z, exposure_low_z, exposure_high_z = [], [], 0, 0
    for seed in range(20):
        m, groups = founder_cohort(seed)
        tuples = sample_ktuples(m, 4, TupleClass.PRIVATE, 20, seed).tuples
        assert tuples
        low_z.append(revelation_rates(tuples, [group_records(m, groups, 0.0, seed)]).private_rate)
        high_z.append(revelation_rates(tuples, [group_records(m, groups, 2.0, seed)]).private_rate)
        group = groups[seed % len(groups)]
        exposure_low_z += exposed_inputs(m, group, 0.0, seed)
        exposure_high_z += exposed_inputs(m, group, 2.0, seed)
    assert np.mean(high_z) < np.mean(low_z)
    assert sign_test(high_z, low_z) < 0.05
    assert exposure_high_z <= exposure_low_z


def copied_halves_cohort(seed: int, samples: int = 40, half: int = 10):
    """Random sites followed by exact copies of them, so site j and site j + half are fully linked."""
    first = np.random.default_rng(seed).integers(2, size=(half, samples))
    rows = np.vstack([first, first])
    return AlleleMatrix.from_rows([[str(t) for t in row] for row in rows])


def test_genomator_keeps_long_range_ld_that_markov_loses():
    wins = 0
    for seed in range(10):
        m = copied_halves_cohort(seed)
        plan = build_clusters(m, 10, m.n_samples, seed)
        records = generate_cohort(m, plan, GenParams(10, 0.0, seed), m.n_samples)
        genomator = ld_square_error(m, records_to_matrix(records, m)).binned_error
        chain = MarkovModel(2).fit(m).generate(m.n_samples, seed)
        markov = ld_square_error(m, records_to_matrix(chain, m)).binned_error
        wins += genomator < markov
    assert wins >= 9
