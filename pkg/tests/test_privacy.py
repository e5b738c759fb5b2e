import math

import pytest

from hapdata.matrix import AlleleMatrix
from privacy.attribute import (SWEEP_COLUMNS, AttrInferenceReport, attr_inference_experiment, frontier_distance,
                               genomator_handle, markov_handle, sweep_table)
from privacy.ktuples import (KTupleSpec, TupleClass, classify, holders, occurs, revelation_rates,
                             revelation_table, sample_ktuples, sign_test)


def test_frontier_distance():
    report = AttrInferenceReport(0.204968944099379, 0.239751552795031, 0.0347826086956522)
    assert frontier_distance(report) == pytest.approx(0.207899249428393, abs=1e-12)


def copy_generator(half: AlleleMatrix, seed: int) -> AlleleMatrix:
    return half


def test_copying_generator_has_zero_in_distance(toy):
    report = attr_inference_experiment(toy, copy_generator, seed=2, parameters={"method": "copy"})
    assert report.in_distance == 0.0
    assert report.out_distance > 0.0
    assert report.difference == report.out_distance
    assert report.parameters == {"method": "copy"}


def test_attr_inference_needs_four_samples(toy):
    with pytest.raises(ValueError):
        attr_inference_experiment(toy.subset([0, 1, 2]), copy_generator)


def test_generator_handles(toy):
    for handle in (genomator_handle(2, 0.0), markov_handle(2)):
        report = attr_inference_experiment(toy, handle, seed=5)
        assert 0.0 <= report.in_distance <= 1.0
        assert 0.0 <= report.out_distance <= 1.0
        assert report == attr_inference_experiment(toy, handle, seed=5)


def test_genomator_handle_rejects_oversized_clusters(toy):
    with pytest.raises(ValueError, match="cluster size 3"):
        attr_inference_experiment(toy, genomator_handle(3, 0.0), seed=5)


def test_sweep_table(toy):
    report = attr_inference_experiment(toy, copy_generator)
    table = sweep_table([("copy", 1, "", report)])
    assert list(table.columns) == SWEEP_COLUMNS
    assert table.loc[0, "frontier_distance"] == pytest.approx(frontier_distance(report))


def test_classify(toy):
    assert list(holders(toy, (0, 1), ("A", "T"))) == [0, 3, 4]
    assert classify(toy, (0, 1), ("A", "T")) == TupleClass.COMMON
    assert classify(toy, (0, 4), ("T", "G")) == TupleClass.PRIVATE
    assert classify(toy, (0, 1), ("G", "G")) == TupleClass.FICTITIOUS
    assert classify(toy, (0,), ("N",)) == TupleClass.FICTITIOUS


def test_sample_ktuples(toy):
    private = sample_ktuples(toy, 2, TupleClass.PRIVATE, 5, seed=1)
    assert private.complete and len(private.tuples) == 5
    for spec in private.tuples:
        assert spec.k == 2 and len(set(spec.positions)) == 2
        assert classify(toy, spec.positions, spec.tokens) == TupleClass.PRIVATE
    assert sample_ktuples(toy, 2, TupleClass.PRIVATE, 5, seed=1) == private


def test_sample_ktuples_budget(toy):
    sample = sample_ktuples(toy, 1, TupleClass.PRIVATE, 3, seed=0, max_draws=0)
    assert not sample.complete and sample.tuples == []
    with pytest.raises(ValueError):
        sample_ktuples(toy, 6, TupleClass.PRIVATE, 1)


def test_revelation_rates(toy):
    private = KTupleSpec(2, (0, 4), ("T", "G"), TupleClass.PRIVATE)
    fictitious = KTupleSpec(2, (0, 1), ("G", "G"), TupleClass.FICTITIOUS)
    leaked = toy.subset([1])
    clean = toy.subset([0, 3])
    assert occurs(private, leaked) and not occurs(private, clean)

    pooled = revelation_rates([private, fictitious], [leaked, clean])
    assert pooled.private_rate == 1.0
    assert pooled.fictitious_rate == 0.0
    assert pooled.corpus_records == 3

    per_dataset = revelation_rates([private, fictitious], [leaked, clean], per_dataset=True)
    assert per_dataset.private_rate == 0.5

    empty = revelation_rates([private], [])
    assert empty.private_rate == 0.0
    assert math.isnan(empty.fictitious_rate)

    table = revelation_table([("pooled", pooled), ("split", per_dataset)])
    assert list(table["label"]) == ["pooled", "split"]


def test_sign_test():
    assert sign_test([0.1] * 10, [0.2] * 10) == pytest.approx(0.5 ** 10)
    assert sign_test([1, 2], [1, 2]) == 1.0
    with pytest.raises(ValueError):
        sign_test([1], [1, 2])
