import math

import numpy as np
import pytest

from prognostic_logit import TrialDataset
from prognostic_logit.errors import ConstantPredictor, NotConverged, OutOfRange, SeparationDetected
from prognostic_logit.logit import (ModelSpec, Status, design_matrix, fit_batch, fit_mle,
                                    predict_probs, wald_test)

import _checks
from _oracles import loglik, numeric_hessian, woolf_se
from conftest import random_dataset


def two_by_two(e0, n0, e1, n1):
    w = np.repeat([0, 0, 1, 1], [e0, n0 - e0, e1, n1 - e1])
    y = np.repeat([1, 0, 1, 0], [e0, n0 - e0, e1, n1 - e1])
    return TrialDataset.from_arrays(w, y, np.linspace(-1, 1, w.size))


def test_matches_grid_search_oracle():
    assert _checks.mle_grid_max_error(n_datasets=50) < 1e-6


def test_saturated_two_by_two_closed_forms():
    assert _checks.saturated_max_error() < 1e-8


def test_score_shift_invariance():
    assert _checks.shift_invariance_max_error() < 1e-6


def test_wald_on_two_by_two():
    # control 10/20, active 15/20: log OR = ln 3, Woolf SE
    fit = fit_mle(two_by_two(10, 20, 15, 20), ModelSpec.UNADJUSTED)
    r = wald_test(fit)
    se = woolf_se(10, 10, 15, 5)
    assert r.estimate == pytest.approx(math.log(3), abs=1e-10)
    assert r.std_error == pytest.approx(se, abs=1e-9)
    assert r.std_error == pytest.approx(0.68313, abs=5e-6)
    assert r.statistic == pytest.approx(1.6082, abs=5e-5)
    assert r.p_value == pytest.approx(0.10778, abs=5e-5)
    lo, hi = r.ci
    assert hi - lo == pytest.approx(2 * 1.959963984540054 * se, rel=1e-12)
    assert fit.coef[0] == pytest.approx(0.0, abs=1e-10)


def test_covariance_is_inverse_observed_information(small_trial):
    fit = fit_mle(small_trial, ModelSpec.ADJUSTED)
    X = design_matrix(ModelSpec.ADJUSTED, small_trial.treatment, small_trial.prognostic_score).T
    y = small_trial.outcome.astype(float)
    H = numeric_hessian(lambda b: loglik(b, X, y), fit.coef)
    np.testing.assert_allclose(fit.cov, np.linalg.inv(-H), rtol=1e-5)
    assert fit.loglik == pytest.approx(loglik(fit.coef, X, y), abs=1e-10)


def test_loglik_path_is_monotone(small_trial):
    fit = fit_mle(small_trial, ModelSpec.ADJUSTED)
    path = np.array(fit.loglik_path)
    assert fit.converged and fit.iterations >= 1
    assert np.all(np.diff(path) >= -1e-12)


def test_separation_is_detected():
    w = np.array([0, 0, 0, 1, 1, 1])
    d = TrialDataset.from_arrays(w, w, [0.1, -0.3, 0.2, 0.5, 0.0, 0.4])
    with pytest.raises(SeparationDetected):
        fit_mle(d, ModelSpec.UNADJUSTED)
    # score perfectly separates outcomes within the adjusted model
    d2 = TrialDataset.from_arrays([0, 1, 0, 1, 0, 1], [0, 0, 0, 1, 1, 1], [-3, -2, -1, 1, 2, 3])
    with pytest.raises(SeparationDetected):
        fit_mle(d2, ModelSpec.ADJUSTED)


def test_constant_score_rejected():
    d = TrialDataset.from_arrays([0, 1, 0, 1], [0, 1, 1, 0], [0.5] * 4)
    with pytest.raises(ConstantPredictor):
        fit_mle(d, ModelSpec.ADJUSTED)
    fit_mle(d, ModelSpec.UNADJUSTED)


def test_iteration_cap(small_trial):
    with pytest.raises(NotConverged) as e:
        fit_mle(small_trial, ModelSpec.ADJUSTED, max_iter=1)
    assert e.value.max_iter == 1


def test_frequency_weights_equal_replicated_rows(rng):
    d = random_dataset(rng, 80)
    counts = rng.integers(0, 4, d.n)
    counts[:4] = 1
    idx = np.repeat(np.arange(d.n), counts)
    XT = design_matrix(ModelSpec.ADJUSTED, d.treatment, d.prognostic_score)
    wfit = fit_batch(XT, d.outcome.astype(float)[None], weights=counts[None].astype(float))
    rfit = fit_mle(d.take(idx), ModelSpec.ADJUSTED)
    np.testing.assert_allclose(wfit.coef[0], rfit.coef, atol=1e-9)
    np.testing.assert_allclose(wfit.cov[0], rfit.cov, rtol=1e-8)


def test_batch_matches_single_fits(rng):
    ds = [random_dataset(rng, 100) for _ in range(5)]
    W = np.stack([d.treatment for d in ds]).astype(float)
    Y = np.stack([d.outcome for d in ds]).astype(float)
    M = np.stack([d.prognostic_score for d in ds])
    batch = fit_batch(design_matrix(ModelSpec.ADJUSTED, W, M), Y)
    assert np.all(batch.status == Status.OK)
    for i, d in enumerate(ds):
        np.testing.assert_allclose(batch.coef[i], fit_mle(d, ModelSpec.ADJUSTED).coef, atol=1e-10)


def test_batch_flags_failures_without_raising(rng):
    good = random_dataset(rng, 40)
    w = good.treatment.astype(float)
    Y = np.stack([good.outcome.astype(float), w])
    XT = design_matrix(ModelSpec.UNADJUSTED, np.stack([w, w]), np.zeros((2, w.size)))
    fit = fit_batch(XT, Y)
    assert fit.status[0] == Status.OK and fit.status[1] == Status.SEPARATION
    assert fit.ok.tolist() == [True, False]


def test_predict_probs(small_trial):
    fit = fit_mle(small_trial, ModelSpec.ADJUSTED)
    p = predict_probs(fit, small_trial)
    b = fit.coef
    ref = 1 / (1 + np.exp(-(b[0] + b[1] * small_trial.treatment + b[2] * small_trial.prognostic_score)))
    np.testing.assert_allclose(p, ref, rtol=1e-13)
    p1 = predict_probs(fit, small_trial, forced_treatment=1)
    assert np.all(p1 >= predict_probs(fit, small_trial, 0)) == (b[1] > 0)
    with pytest.raises(OutOfRange):
        predict_probs(fit, small_trial, forced_treatment=2)
    # score equation: residuals orthogonal to every column at the MLE
    X = design_matrix(ModelSpec.ADJUSTED, small_trial.treatment, small_trial.prognostic_score)
    assert np.max(np.abs(X @ (small_trial.outcome - p))) < 1e-8


def test_wald_test_arguments(small_trial):
    fit = fit_mle(small_trial, ModelSpec.UNADJUSTED)
    with pytest.raises(OutOfRange):
        wald_test(fit, coef_index=2)
    with pytest.raises(OutOfRange):
        wald_test(fit, alpha=1.0)
    shifted = wald_test(fit, null_value=fit.coef[1])
    assert shifted.statistic == 0.0 and shifted.p_value == 1.0


def test_fitted_model_is_read_only(small_trial):
    fit = fit_mle(small_trial, ModelSpec.ADJUSTED)
    with pytest.raises(ValueError):
        fit.coef[0] = 1.0
    d = fit.to_dict()
    assert d["coef_names"] == ["intercept", "treatment", "prognostic_score"]
    assert d["converged"] is True
