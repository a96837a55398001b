import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from zibreg.exceptions import DomainError, NumericalFailure, ValidationError
from zibreg.model import Dataset
from zibreg.optimizer import FitOptions, fit, fit_unpenalized
from zibreg.penalty import PenaltySpec
from zibreg.selection import (
    DEFAULT_GRID,
    LambdaGrid,
    SingularInformationWarning,
    _argmin_prefer_larger,
    aic,
    bic,
    cross_validate,
    lambda_path,
    normal_quantile,
    standard_errors,
    stratified_folds,
    wald_intervals,
)


@pytest.fixture(scope="module")
def lasso_path(scenario1_data):
    return lambda_path(scenario1_data, PenaltySpec("lasso"))


def test_criteria_formulas(scenario1_data):
    res = fit(scenario1_data, PenaltySpec("lasso", 2.0, 2.0))
    pll = res.log_likelihood_at_solution - res.penalty_at_solution
    df = int(np.count_nonzero(res.theta))
    assert bic(res) == pytest.approx(-2 * pll + math.log(500) * df)
    assert aic(res) == pytest.approx(-2 * pll + 2 * df)
    assert bic(res, n=100) == pytest.approx(-2 * pll + math.log(100) * df)
    with pytest.raises(DomainError):
        bic(res, n=0)


def test_argmin_ties_go_to_larger_lambda():
    assert _argmin_prefer_larger(np.array([1.0, 0.5, 0.5, 2.0])) == 2
    assert _argmin_prefer_larger(np.array([np.nan, 3.0, np.nan])) == 1
    with pytest.raises(NumericalFailure):
        _argmin_prefer_larger(np.array([np.nan, np.nan]))


def test_grid_validation():
    assert LambdaGrid().values == DEFAULT_GRID
    for bad in [(), (0.1, 0.1), (0.5, 0.1), (-1.0,), (math.inf,)]:
        with pytest.raises(DomainError):
            LambdaGrid(bad)


def test_path_active_set_shrinks(lasso_path):
    sizes = [len(r.active_set) for r in lasso_path.results]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] == 0
    i = lasso_path.selected_index
    assert lasso_path.bic[i] == np.nanmin(lasso_path.bic)
    table = lasso_path.table()
    assert len(table) == len(DEFAULT_GRID) and sum(r["selected"] for r in table) == 1


def test_path_matches_cold_fits(scenario1_data, lasso_path):
    for lam, res in zip(DEFAULT_GRID, lasso_path.results):
        cold = fit(scenario1_data, PenaltySpec("lasso", lam, lam))
        assert res.final_objective == pytest.approx(cold.final_objective, rel=1e-8, abs=1e-8)


def test_aic_criterion_selects_min_aic(scenario1_data):
    path = lambda_path(scenario1_data, PenaltySpec("ridge"), criterion="aic")
    assert path.aic[path.selected_index] == np.nanmin(path.aic)
    with pytest.raises(DomainError):
        lambda_path(scenario1_data, PenaltySpec("ridge"), criterion="dic")


def test_folds_are_stratified_and_row_order_free(scenario1_data):
    folds = stratified_folds(scenario1_data, 5, seed=4)
    for f in range(5):
        ones = scenario1_data.y[folds == f].sum()
        assert abs(ones - scenario1_data.y.sum() / 5) <= 1
        assert abs((folds == f).sum() - 100) <= 1
    perm = np.random.default_rng(0).permutation(scenario1_data.n)
    folds_perm = stratified_folds(scenario1_data.subset(perm), 5, seed=4)
    np.testing.assert_array_equal(folds_perm, folds[perm])
    np.testing.assert_array_equal(stratified_folds(scenario1_data, 5, seed=4), folds)


def test_folds_reject_single_class_training():
    X = np.ones((4, 1))
    data = Dataset(y=np.array([1.0, 0.0, 0.0, 0.0]), X=X, Z=X)
    with pytest.raises(ValidationError):
        stratified_folds(data, 4, seed=0)
    with pytest.raises(DomainError):
        stratified_folds(data, 1, seed=0)


def test_cross_validation(scenario1_data):
    grid = LambdaGrid((0.01, 1.0, 100.0))
    path = cross_validate(scenario1_data, PenaltySpec("lasso"), grid, k=3, seed=1)
    assert path.criterion == "cv" and path.cv_loss.shape == (3,)
    assert np.all(np.isfinite(path.cv_loss)) and np.all(path.cv_loss > 0)
    assert path.cv_loss[path.selected_index] == path.cv_loss.min()
    # lambda = 100 zeroes everything: loss is the held-out NLL of theta = 0
    assert path.cv_loss[2] == pytest.approx(
        -(scenario1_data.y * math.log(0.25) + (1 - scenario1_data.y) * math.log(0.75)).mean()
    )
    again = cross_validate(scenario1_data, PenaltySpec("lasso"), grid, k=3, seed=1)
    np.testing.assert_array_equal(again.cv_loss, path.cv_loss)


def test_standard_errors_match_inverse_information(scenario1_data):
    res = fit_unpenalized(scenario1_data)
    se = standard_errors(res)
    np.testing.assert_allclose(se, np.sqrt(np.diag(np.linalg.inv(res.information_at_solution))), rtol=1e-10)
    ci = wald_intervals(res, 0.95, se)
    np.testing.assert_allclose(ci[:, 1] - ci[:, 0], 2 * norm.ppf(0.975) * se, rtol=1e-12)


def test_standard_errors_only_on_support(scenario1_data):
    res = fit(scenario1_data, PenaltySpec("lasso", 10.0, 10.0))
    se = standard_errors(res)
    zero = res.theta == 0.0
    assert np.all(np.isnan(se[zero])) and np.all(np.isfinite(se[~zero]))
    sub = res.information_at_solution[np.ix_(~zero, ~zero)]
    np.testing.assert_allclose(se[~zero], np.sqrt(np.diag(np.linalg.inv(sub))), rtol=1e-10)
    assert np.all(np.isnan(wald_intervals(res)[zero]))


def test_singular_information_warns():
    # duplicated covariate column makes the information singular
    rng = np.random.default_rng(5)
    x = rng.normal(size=200)
    X = np.column_stack([np.ones(200), x, x])
    Z = np.ones((200, 1))
    y = (rng.random(200) < 0.4).astype(float)
    res = fit(Dataset(y=y, X=X, Z=Z), PenaltySpec("ridge", 0.01, 0.01))
    with pytest.warns(SingularInformationWarning):
        se = standard_errors(res)
    assert np.all(np.isfinite(se))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        standard_errors(res, warn=False)


def test_level_validation(scenario1_data):
    res = fit(scenario1_data, PenaltySpec("ridge", 1.0, 1.0))
    with pytest.raises(DomainError):
        wald_intervals(res, 1.0)


@given(st.floats(1e-300, 1 - 1e-16, exclude_min=False))
def test_normal_quantile_matches_scipy(prob):
    assert normal_quantile(prob) == pytest.approx(norm.ppf(prob), rel=1e-13, abs=1e-13)


def test_normal_quantile_domain():
    assert normal_quantile(0.5) == 0.0
    for bad in (0.0, 1.0, -0.1, math.nan):
        with pytest.raises(DomainError):
            normal_quantile(bad)


def _stub(pll, df, n=100):
    from types import SimpleNamespace
    return SimpleNamespace(penalized_log_likelihood=pll, df=df, n_obs=n)


def test_criteria_hand_arithmetic():
    assert bic(_stub(-50.0, 3)) == pytest.approx(113.8155, abs=1e-4)
    assert aic(_stub(-50.0, 3)) == 106.0
    assert bic(_stub(-50.0, 0)) == aic(_stub(-50.0, 0)) == 100.0


@given(st.floats(-1e4, 0), st.integers(0, 50), st.integers(1, 10**6))
def test_bic_minus_aic(pll, df, n):
    r = _stub(pll, df, n)
    assert bic(r) - aic(r) == pytest.approx((math.log(n) - 2) * df, abs=1e-9 * (1 + abs(pll)))


def test_single_zero_lambda_grid_is_the_mle(scenario1_data):
    path = lambda_path(scenario1_data, PenaltySpec("lasso"), LambdaGrid((0.0,)))
    mle = fit_unpenalized(scenario1_data)
    assert len(path.results) == 1 and path.selected_lambda == 0.0
    np.testing.assert_allclose(path.selected_result.theta, mle.theta, atol=1e-4)


def test_warm_and_cold_paths_agree(scenario1_data, lasso_path):
    cold = lambda_path(scenario1_data, PenaltySpec("lasso"), warm_start=False)
    for w, c in zip(lasso_path.results, cold.results):
        assert w.final_objective == pytest.approx(c.final_objective, abs=1e-6)


def test_leave_one_out_cv():
    from zibreg.simulation import SCENARIO_1, generate_dataset
    data = generate_dataset(SCENARIO_1, 30, np.random.default_rng(6))
    path = cross_validate(data, PenaltySpec("ridge"), LambdaGrid((0.1, 1.0, 10.0)), k=30, seed=0)
    assert np.all(np.isfinite(path.cv_loss))


def test_cv_selection_is_row_order_free(scenario1_data):
    grid = LambdaGrid((0.01, 0.1, 0.5, 10.0))
    a = cross_validate(scenario1_data, PenaltySpec("lasso"), grid, k=5, seed=3)
    perm = np.random.default_rng(1).permutation(scenario1_data.n)
    b = cross_validate(scenario1_data.subset(perm), PenaltySpec("lasso"), grid, k=5, seed=3)
    assert a.selected_lambda == b.selected_lambda
    np.testing.assert_allclose(a.cv_loss, b.cv_loss, rtol=1e-6)


def test_logistic_sub_case_matches_textbook_standard_errors():
    sm = pytest.importorskip("statsmodels.api")
    rng = np.random.default_rng(8)
    n = 400
    Q, _ = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, 2))]))
    X = Q * np.sign(Q[0, 0]) * np.sqrt(n)  # orthogonal columns
    X[:, 0] = 1.0
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ [0.2, 0.5, -0.4])))).astype(float)
    ref = sm.Logit(y, X).fit(disp=0, tol=1e-12)
    data = Dataset(y=y, X=X, Z=np.ones((n, 1)))
    theta = np.append(ref.params, -30.0)  # pi ~ 1e-13: no inflation
    res = fit(data, PenaltySpec.none(), FitOptions(initial_theta=theta, max_iterations=0))
    se = standard_errors(res, warn=False)
    np.testing.assert_allclose(se[:3], ref.bse, rtol=1e-6)


def test_scalar_standard_error(scenario1_data):
    data = Dataset(y=scenario1_data.y, X=scenario1_data.X[:, :1], Z=scenario1_data.Z[:, :1])
    res = fit(data, PenaltySpec("lasso", 0.0, 1000.0))
    assert res.support == (0,)
    assert standard_errors(res)[0] == pytest.approx(1 / math.sqrt(res.information_at_solution[0, 0]), rel=1e-12)


def test_wald_hand_example():
    from types import SimpleNamespace
    r = SimpleNamespace(theta=np.array([1.0]))
    lo, hi = wald_intervals(r, 0.95, se=np.array([0.5]))[0]
    assert (lo, hi) == (pytest.approx(0.02002, abs=1e-5), pytest.approx(1.97998, abs=1e-5))
    lo, hi = wald_intervals(r, 1e-12, se=np.array([0.5]))[0]
    assert hi - lo < 1e-11


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=8), st.floats(0.01, 0.999))
def test_intervals_are_symmetric(values, level):
    from types import SimpleNamespace
    theta = np.array(values)
    se = np.abs(theta) / 3 + 0.1
    ci = wald_intervals(SimpleNamespace(theta=theta), level, se=se)
    np.testing.assert_allclose((ci[:, 0] + ci[:, 1]) / 2, theta, atol=1e-15 * (1 + np.abs(theta).max()) * 100)
    assert np.all(theta - ci[:, 0] == pytest.approx(ci[:, 1] - theta, abs=1e-13))


def test_aic_magnitude_for_scenario_two():
    from zibreg.simulation import SCENARIO_2, generate_dataset
    data = generate_dataset(SCENARIO_2, 1000, np.random.default_rng(44))
    value = aic(fit(data, PenaltySpec("ridge", 0.01, 0.01)))
    assert 100 <= value < 1000


@pytest.mark.slow
def test_bic_rejects_extreme_shrinkage():
    from zibreg.simulation import SCENARIO_1, generate_dataset
    wins = 0
    for s in range(50):
        data = generate_dataset(SCENARIO_1, 500, np.random.default_rng(900 + s))
        small = fit(data, PenaltySpec("lasso", 0.05, 0.05))
        huge = fit(data, PenaltySpec("lasso", 1000.0, 1000.0))
        wins += bic(small) < bic(huge)
    assert wins >= 45


def _cv_selected_index(s):
    from zibreg.simulation import SCENARIO_1, generate_dataset
    data = generate_dataset(SCENARIO_1, 500, np.random.default_rng(1200 + s))
    return cross_validate(data, PenaltySpec("lasso"), k=5, seed=s).selected_index


@pytest.mark.slow
def test_cv_usually_selects_interior_lambda():
    import os
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=min(8, os.cpu_count() or 1)) as pool:
        chosen = list(pool.map(_cv_selected_index, range(50)))
    interior = sum(0 < i < len(DEFAULT_GRID) - 1 for i in chosen)
    assert interior >= 40, chosen
