import itertools
import math

import pandas as pd
import pytest

from conftest import all_outputs, brute_force_posterior, reverse_feasible_sets
from generator.genomator import GenParams, generate_one
from hapdata.matrix import AlleleMatrix
from reverse.exposure import exposure_experiment, exposure_report, wilson_interval
from reverse.posterior import (MAX_SAMPLES, PosteriorReport, count_outputs, posterior_from_ratios,
                               theorem1_posterior)
from reverse.problem import (CandidateSet, ReverseInfeasibleError, build_reverse_constraints,
                             collect_half_clauses, eliminate_subsumed, enumerate_candidate_sets,
                             mask_members, pair_constraints, run_trial, sample_candidate_sets)


def test_mask_members():
    assert mask_members(0b10110) == [1, 2, 4]
    assert mask_members(0) == []


def test_half_clauses_of_a_member(toy):
    masks = collect_half_clauses(toy.column(0), toy)
    assert all(m & 1 for m in masks)
    assert masks == sorted(masks, key=lambda m: (m.bit_count(), m))


def test_eliminate_subsumed():
    kept = eliminate_subsumed({0b011: 1, 0b111: 1, 0b110: 2, 0b1110: 1})
    assert kept == [(0b011, 1), (0b110, 2)]


def test_pair_constraints_raise_on_small_intersection():
    with pytest.raises(ReverseInfeasibleError) as info:
        pair_constraints([0b01, 0b10], 0.0, 0)
    assert info.value.diagnostics["size"] == 0


def test_infeasible_trials_report_the_failing_pair():
    cohort = AlleleMatrix.from_rows([["A", "T"], ["A", "T"]])
    problem = build_reverse_constraints(("A", "T"), cohort, 1)
    with pytest.raises(ReverseInfeasibleError) as info:
        sample_candidate_sets(problem, 3)
    diagnostics = info.value.diagnostics
    assert diagnostics["trials"] == 3
    assert diagnostics["size"] == 0 and diagnostics["needed"] == 1
    assert len(diagnostics["pair"]) == 2


def test_candidate_sets_contain_true_cluster(toy):
    record = generate_one(toy.subset([0, 3, 4]), GenParams(3, seed=2))
    problem = build_reverse_constraints(record.tokens, toy, 3)
    sets = sample_candidate_sets(problem, 10, seed=1)
    expected = set(reverse_feasible_sets(record.tokens, toy, 3))
    assert (0, 3, 4) in expected
    for s in sets:
        assert s.feasible and len(s.members) == 3
        assert s.members in expected


def test_enumeration_matches_brute_force(toy):
    for sample in range(toy.n_samples):
        record = toy.column(sample)
        problem = build_reverse_constraints(record, toy, 2)
        found = enumerate_candidate_sets(problem, 100)
        assert found.exhausted
        assert found.sets == reverse_feasible_sets(record, toy, 2)


def test_trials_are_reproducible(toy):
    problem = build_reverse_constraints(toy.column(3), toy, 2, z_max=2.5)
    first = [run_trial(problem, t, 4) for t in range(6)]
    assert first == [run_trial(problem, t, 4) for t in range(6)]
    fixed = build_reverse_constraints(toy.column(3), toy, 2)
    assert sample_candidate_sets(fixed, 4, seed=4) == sample_candidate_sets(fixed, 4, seed=4)


def test_trial_with_infeasible_draws(toy):
    problem = build_reverse_constraints(toy.column(0), toy, 1, z_max=5.0)
    outcomes = [run_trial(problem, t, 0) for t in range(5)]
    assert all(isinstance(o, CandidateSet) for o in outcomes)
    assert all(o.members == () for o in outcomes if not o.feasible)


def test_reverse_argument_checks(toy):
    with pytest.raises(ValueError):
        build_reverse_constraints(toy.column(0), toy, 6)
    with pytest.raises(ValueError):
        build_reverse_constraints(tuple("ATGCN"), toy, 2)
    with pytest.raises(ValueError):
        build_reverse_constraints(tuple("ATGC"), toy, 2)


def test_wilson_interval():
    low, high = wilson_interval(0, 20, 0.9)
    assert low == 0.0
    assert high == pytest.approx(0.11916, abs=1e-4)
    low, high = wilson_interval(10, 20)
    assert low < 0.5 < high
    assert low + high == pytest.approx(1.0)
    with pytest.raises(ValueError):
        wilson_interval(1, 0)
    with pytest.raises(ValueError):
        wilson_interval(3, 2)


def test_exposure_report():
    sets = [CandidateSet((0, 2), 0), CandidateSet((0, 3), 1), CandidateSet((), 2, False)]
    report = exposure_report(sets, 4, ["a", "b", "c", "d"])
    assert report.exposed == (0,)
    assert report.iterations == 2 and report.trials == 3
    assert report.probability == 0.5
    assert report.frequencies["a"] == 1.0
    assert report.frequencies["c"] == 0.5
    assert report.to_dict()["exposed"] == [0]
    with pytest.raises(ValueError):
        exposure_report([CandidateSet((), 0, False)], 4)


def test_exposure_experiment(toy):
    result = exposure_experiment(toy, 2, 0.0, repetitions=3, trials=4, sites=4, seed=1)
    assert isinstance(result.table, pd.DataFrame)
    assert list(result.table.columns) == ["repetition", "individuals", "feasible_trials", "exposed_inputs",
                                          "exposed_others"]
    assert result.total == 6
    assert 0 <= result.exposed <= 6
    assert result.rate == result.exposed / 6
    with pytest.raises(ValueError):
        exposure_experiment(toy, 2, 0.0, repetitions=1, trials=1, sites=9)


def test_posterior_from_ratios():
    assert posterior_from_ratios(0.0, math.nan) == 1.0
    assert posterior_from_ratios(1.0, 1.0) == 0.5
    assert posterior_from_ratios(3.0, 1 / 3) == 0.5
    with pytest.raises(ValueError):
        posterior_from_ratios(-1.0, 1.0)


def test_count_outputs_matches_brute_force(toy):
    for members in [(0,), (0, 3), (1, 2)]:
        assert count_outputs(toy.subset(members)) == len(all_outputs(toy, members))


def test_posterior_matches_brute_force(toy):
    record = toy.column(0)
    report = theorem1_posterior(record, toy, 0, 2)
    assert isinstance(report, PosteriorReport)
    assert report.n_in >= 1
    assert report.posterior == pytest.approx(brute_force_posterior(record, toy, 0, 2))
    assert set(report.model_counts) == set(reverse_feasible_sets(record, toy, 2))


def test_posterior_without_support(toy):
    record = toy.column(0)
    outsiders = [t for t in range(5) if not any(t in c for c in reverse_feasible_sets(record, toy, 2))]
    for target in outsiders:
        report = theorem1_posterior(record, toy, target, 2)
        assert report.no_support and report.posterior == 0.0


def test_posterior_size_limits(toy):
    wide = toy.subset(list(itertools.chain(range(5), range(5), [0])))
    assert wide.n_samples > MAX_SAMPLES
    with pytest.raises(ValueError):
        theorem1_posterior(toy.column(0), wide, 0, 2)
    with pytest.raises(IndexError):
        theorem1_posterior(toy.column(0), toy, 7, 2)
