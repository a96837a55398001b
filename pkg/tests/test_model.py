import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit as scipy_expit

from zibreg.exceptions import DatasetValidationError, DomainError, ShapeError
from zibreg.model import (
    Dataset,
    Parameters,
    event_probability,
    logistic,
    mixture_pmf,
    mixture_probabilities,
    validate_dataset,
    zero_inflation_probability,
)

finite = st.floats(-700, 700, allow_nan=False)


def test_logistic_at_zero():
    assert logistic(0.0) == 0.5


def test_logistic_matches_scipy_in_the_bulk():
    u = np.linspace(-30, 30, 601)
    np.testing.assert_allclose(logistic(u), scipy_expit(u), rtol=1e-15, atol=0)


def test_logistic_saturates_strictly_inside_unit_interval():
    hi, lo = logistic(710.0), logistic(-710.0)
    assert hi < 1.0 and hi == np.nextafter(1.0, 0.0)
    assert 0.0 < lo


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_logistic_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        logistic(bad)
    with pytest.raises(DomainError):
        logistic(np.array([0.0, bad]))


@given(finite)
def test_logistic_symmetry(u):
    # 1 - logistic(u) vs logistic(-u); compare away from saturation clipping
    if abs(u) < 30:
        assert math.isclose(logistic(u) + logistic(-u), 1.0, rel_tol=1e-15)
    assert 0.0 < logistic(u) < 1.0


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_logistic_monotone(a, b):
    if a <= b:
        assert logistic(a) <= logistic(b)


def test_event_and_inflation_probability_single_row():
    beta = np.array([0.5, -1.0])
    x = np.array([1.0, 2.0])
    assert event_probability(beta, x) == pytest.approx(1.0 / (1.0 + math.exp(1.5)), rel=1e-15)
    assert zero_inflation_probability(beta, x) == event_probability(beta, x)


def test_dimension_mismatch_raises():
    with pytest.raises(ShapeError):
        event_probability(np.zeros(3), np.ones(2))


def test_mixture_pmf_values():
    theta = Parameters(np.array([0.0]), np.array([0.0]))
    x = z = np.array([1.0])
    assert mixture_pmf(theta, x, z, 1) == pytest.approx(0.25)
    assert mixture_pmf(theta, x, z, 0) == pytest.approx(0.75)


def test_mixture_pmf_rejects_non_binary():
    theta = Parameters(np.array([0.0]), np.array([0.0]))
    with pytest.raises(DomainError):
        mixture_pmf(theta, np.ones(1), np.ones(1), 2)


@settings(max_examples=200)
@given(st.floats(-40, 40), st.floats(-40, 40))
def test_pmf_sums_to_one(a, b):
    theta = Parameters(np.array([a]), np.array([b]))
    x = z = np.array([1.0])
    total = mixture_pmf(theta, x, z, 0) + mixture_pmf(theta, x, z, 1)
    assert total == pytest.approx(1.0, abs=1e-15)
    assert mixture_pmf(theta, x, z, 1) <= 1.0 - mixture_probabilities(theta, x, z).pi + 1e-15


def test_mixture_probabilities_accepts_tuple(rng):
    beta, gamma = rng.normal(size=3), rng.normal(size=2)
    X, Z = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    a = mixture_probabilities((beta, gamma), X, Z)
    b = mixture_probabilities(Parameters(beta, gamma), X, Z)
    np.testing.assert_array_equal(a.p_one, b.p_one)
    np.testing.assert_allclose(a.p_one, (1 - scipy_expit(Z @ gamma)) * scipy_expit(X @ beta), rtol=1e-14)


def test_parameters_flat_roundtrip(rng):
    theta = Parameters(rng.normal(size=4), rng.normal(size=3))
    assert Parameters.from_flat(theta.flat, 4) == theta


def test_validate_dataset_accepts_clean(rng):
    X = np.column_stack([np.ones(5), rng.normal(size=5)])
    d = validate_dataset((np.array([0, 1, 0, 1, 1]), X, X))
    assert isinstance(d, Dataset) and d.n == 5 and d.p == 2


def test_validate_dataset_collects_every_problem():
    X = np.column_stack([np.ones(3), [0.0, np.nan, 1.0]])
    Z = np.column_stack([[1.0, 2.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(DatasetValidationError) as info:
        validate_dataset((np.array([0.0, 0.5, 1.0]), X, Z))
    msg = "\n".join(info.value.problems)
    assert "X[1, 1]" in msg and "Z column 0" in msg and "y[1]" in msg


def test_validate_dataset_row_mismatch():
    with pytest.raises(DatasetValidationError):
        validate_dataset((np.zeros(3), np.ones((2, 1)), np.ones((3, 1))))


def test_logistic_reference_points():
    assert logistic(math.log(3.0)) == pytest.approx(0.75, rel=1e-15)
    # 1 - 1e-300 is not representable; the closest value below 1 is returned
    assert logistic(710.0) == np.nextafter(1.0, 0.0) and np.isfinite(logistic(710.0))


def test_event_probability_reference_points():
    assert event_probability(np.zeros(5), np.array([1.0, 3, -2, 7, 0])) == 0.5
    assert event_probability(np.array([math.log(3), 0, 0]), np.array([1.0, 5, -5])) == pytest.approx(0.75)
    beta = np.array([-0.9, -0.65, -0.2, 0.65, 0.0])
    x = np.array([1.0, 0.0, 1.0, 3.5, 2.0])
    assert event_probability(beta, x) == pytest.approx(1 / (1 + math.exp(-1.175)), rel=1e-14)


def test_inflation_probability_reference_points():
    assert zero_inflation_probability(np.zeros(3), np.ones(3)) == 0.5
    gamma = np.array([-0.55, -0.7, -1.0, 0.45, 0.0])
    z = np.array([1.0, -1.0, 0.0, 1.0, 0.0])
    assert zero_inflation_probability(gamma, z) == pytest.approx(1 / (1 + math.exp(-0.6)), rel=1e-14)
    big = zero_inflation_probability(np.array([800.0]), np.array([1.0]))
    assert math.isfinite(big) and big < 1.0


def test_degenerate_mixture_limits():
    x = np.array([1.0, 0.3])
    beta = np.array([0.2, -1.1])
    no_inflation = Parameters(beta, np.array([-50.0]))
    all_inflation = Parameters(beta, np.array([50.0]))
    z = np.array([1.0])
    assert mixture_pmf(no_inflation, x, z, 1) == pytest.approx(event_probability(beta, x), abs=1e-15)
    assert mixture_pmf(all_inflation, x, z, 0) == pytest.approx(1.0, abs=1e-15)


@given(st.floats(-30, 30), st.floats(-30, 30), st.floats(0.01, 5), st.floats(-20, 20))
def test_event_pmf_increasing_in_linear_predictor(a, d, step, g):
    z = np.array([1.0])
    lo = mixture_pmf((np.array([a]), np.array([g])), np.array([1.0]), z, 1)
    hi = mixture_pmf((np.array([a + step]), np.array([g])), np.array([1.0]), z, 1)
    assert hi >= lo
    if abs(a) < 15 and abs(g) < 15:
        assert hi > lo


def test_validate_dataset_returns_input_unchanged():
    X = np.column_stack([np.ones(3), [0.5, -1.0, 2.0]])
    y = np.array([0.0, 1.0, 0.0])
    d = validate_dataset(Dataset(y=y, X=X, Z=X))
    np.testing.assert_array_equal(d.y, y)
    np.testing.assert_array_equal(d.X, X)
    with pytest.raises(DatasetValidationError, match=r"y\[2\]"):
        validate_dataset((np.array([0.0, 1.0, 2.0]), X, X))
