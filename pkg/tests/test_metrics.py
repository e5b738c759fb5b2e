import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hapdata.matrix import AlleleMatrix
from metrics.frequency import allele_frequency, frequency_correlation, frequency_table, site_frequencies
from metrics.ld import compare_r2, dosage_matrix, ld_r2, ld_square_error, minor_tokens, r2_matrix
from metrics.pca import ConvergenceError, coordinates_table, pca_fit, pca_project
from metrics.wasserstein import random_directions, sliced_wasserstein, wasserstein_1d


def binary(rows) -> AlleleMatrix:
    return AlleleMatrix.from_rows([[str(t) for t in row] for row in rows], alphabet=("0", "1"))


def test_allele_frequency(toy):
    assert allele_frequency(toy, 0, "A") == 0.6
    assert allele_frequency(toy, 0, "G") == 0.0
    with pytest.raises(ValueError):
        allele_frequency(toy, 0, "N")


def test_site_frequencies_sum_to_one(toy):
    freqs = site_frequencies(toy).reshape(5, 4)
    assert np.allclose(freqs.sum(axis=1), 1.0)


def test_frequency_table(toy):
    table = frequency_table(toy)
    assert len(table) == 20
    row = table[(table.site == 0) & (table.token == "A")].iloc[0]
    assert row["count"] == 3 and row["frequency"] == 0.6


def test_frequency_correlation(toy):
    assert frequency_correlation(toy, toy) == pytest.approx(1.0)
    constant = AlleleMatrix.from_rows([["0", "0"], ["1", "1"]])
    assert math.isnan(frequency_correlation(constant, constant))


def test_minor_tokens_and_dosage():
    m = binary([[0, 0, 1], [1, 1, 0], [0, 1, 0]])
    assert minor_tokens(m) == ["1", "0", "1"]
    assert dosage_matrix(m).tolist() == [[0, 0, 1], [0, 0, 1], [0, 1, 0]]


def test_r2_matrix():
    dosage = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 1, 1.0]])
    r2 = r2_matrix(dosage)
    assert r2[0, 1] == pytest.approx(1.0)
    assert r2[0, 2] == pytest.approx(1.0)
    assert np.isnan(r2[0, 3]) and np.isnan(r2[3, 3])
    assert r2[0, 0] == 1.0


def test_ld_r2(toy):
    assert ld_r2(toy, 0, 0) == pytest.approx(1.0)


def test_identical_matrices_have_no_ld_error(toy):
    report = ld_square_error(toy, toy)
    assert report.binned_error == 0.0
    assert report.overall_error == 0.0
    assert report.to_dict()["mode"] == "binned"


def test_binned_error():
    real = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.4], [0.2, 0.4, 1.0]])
    synth = np.array([[1.0, 0.3, 0.2], [0.3, 1.0, 0.0], [0.2, 0.0, 1.0]])
    report = compare_r2(real, synth)
    assert report.binned[1] == pytest.approx((0.04 + 0.16) / 2)
    assert report.binned[2] == pytest.approx(0.0)
    assert report.binned_error == pytest.approx(0.05)
    assert report.overall_error == pytest.approx(0.2 / 3)
    assert report.reference_ld == pytest.approx(1.1 / 3)


def test_windowed_error():
    real = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.4], [0.2, 0.4, 1.0]])
    synth = np.array([[1.0, 0.3, 0.2], [0.3, 1.0, 0.0], [0.2, 0.0, 1.0]])
    report = compare_r2(real, synth, "windowed", windows=[2, 3])
    assert report.windowed[2] == pytest.approx((0.04 + 0.16) / 2)
    assert report.windowed[3] == pytest.approx(0.2 / 3)
    assert report.error == pytest.approx(np.mean([0.1, 0.2 / 3]))
    with pytest.raises(ValueError):
        compare_r2(real, synth, "windowed", windows=[1])


def test_ld_argument_checks(toy):
    with pytest.raises(ValueError):
        ld_square_error(toy, toy, mode="windowed")
    with pytest.raises(ValueError):
        ld_square_error(toy, toy.select_sites([0, 1]))


def test_pca_recovers_dominant_axis():
    rng = np.random.default_rng(0)
    points = rng.standard_normal((200, 3)) * np.array([5.0, 1.0, 0.2])
    model = pca_fit(points, 2, seed=1)
    assert abs(model.components[0, 0]) == pytest.approx(1.0, abs=1e-2)
    assert model.components[0, 0] > 0
    assert model.explained_variance[0] > model.explained_variance[1]
    assert np.allclose(model.components @ model.components.T, np.eye(2), atol=1e-8)
    eigen = np.sort(np.linalg.eigvalsh(np.cov(points.T)))[::-1][:2]
    assert np.allclose(model.explained_variance, eigen, rtol=1e-6)


def test_pca_projection_and_table(toy):
    model = pca_fit(toy, 2)
    coords = pca_project(model, toy)
    assert coords.shape == (5, 2)
    assert np.allclose(coords.mean(axis=0), 0.0, atol=1e-9)
    table = coordinates_table(model, toy, group="real")
    assert list(table.columns) == ["group", "sample", "PC1", "PC2"]


def test_pca_argument_checks():
    with pytest.raises(ValueError):
        pca_fit(np.zeros((3, 2)), 3)
    points = np.random.default_rng(0).standard_normal((30, 20))
    with pytest.raises(ConvergenceError):
        pca_fit(points, 1, tol=0.0, max_iter=1)


def test_wasserstein_1d():
    assert wasserstein_1d([0, 1], [0, 1]) == 0.0
    assert wasserstein_1d([0, 0], [1, 1]) == pytest.approx(1.0)
    assert wasserstein_1d([0], [0, 2]) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        wasserstein_1d([], [1])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)), elements=st.floats(-10, 10)))
def test_sliced_wasserstein_of_a_set_with_itself(points):
    assert sliced_wasserstein(points, points, 10, seed=3).distance == pytest.approx(0.0, abs=1e-9)


def test_sliced_wasserstein_shift():
    x = np.zeros((4, 2))
    report = sliced_wasserstein(x, x + np.array([3.0, 0.0]), directions=[[1.0, 0.0]])
    assert report.distance == pytest.approx(3.0)
    assert report.percent_error == pytest.approx(150.0)
    assert sliced_wasserstein(x, x + 1, 7, seed=2).num_projections == 7
    with pytest.raises(ValueError):
        sliced_wasserstein(x, np.zeros((4, 3)))


def test_random_directions_are_unit():
    directions = random_directions(5, 50, seed=4)
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)
    assert np.array_equal(directions, random_directions(5, 50, seed=4))
