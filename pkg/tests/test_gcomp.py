import json
import math

import numpy as np
import pytest

from prognostic_logit import TrialDataset
from prognostic_logit.errors import (DegenerateOutcomes, DegenerateRate, OutOfRange,
                                     TooManyDiscards)
from prognostic_logit.gcomp import (Estimand, MarginalEstimates, analyze, bootstrap_ci,
                                    bootstrap_cis, bootstrap_draws, cis_from_draws,
                                    concordance_index, draws_from_counts, marginal_wald,
                                    percentile_interval, plug_in_estimates, resample_counts)
from prognostic_logit.logit import ModelSpec, fit_mle, predict_probs

import _checks
from _oracles import brute_concordance, central_difference_jacobian, plug_in
from conftest import random_dataset


def test_jacobians_match_finite_differences():
    worst = _checks.jacobian_max_rel_error(n_fits=100)
    assert max(worst.values()) < 1e-6


def test_plug_in_matches_brute_force(small_trial):
    fit = fit_mle(small_trial, ModelSpec.ADJUSTED)
    est = plug_in_estimates(fit, small_trial)
    ref = plug_in(fit.coef, None, small_trial.prognostic_score)
    assert est.rd == pytest.approx(ref[0], abs=1e-14)
    assert math.log(est.rr) == pytest.approx(ref[1], abs=1e-13)
    assert math.log(est.or_) == pytest.approx(ref[2], abs=1e-13)
    assert est.p_bar_1 == pytest.approx(predict_probs(fit, small_trial, 1).mean(), abs=1e-15)


def test_unadjusted_plug_in_is_arm_rates(small_trial):
    est = plug_in_estimates(fit_mle(small_trial, ModelSpec.UNADJUSTED), small_trial)
    w, y = small_trial.treatment, small_trial.outcome
    assert est.p_bar_1 == pytest.approx(y[w == 1].mean(), abs=1e-10)
    assert est.p_bar_0 == pytest.approx(y[w == 0].mean(), abs=1e-10)


def test_delta_variance_is_quadratic_form(small_trial):
    fit = fit_mle(small_trial, ModelSpec.ADJUSTED)
    for e, col in ((Estimand.RD, 0), (Estimand.RR, 1), (Estimand.OR, 2)):
        J = central_difference_jacobian(lambda b: plug_in(b, None, small_trial.prognostic_score)[col], fit.coef)
        mw = marginal_wald(fit, small_trial, e)
        assert mw.variance == pytest.approx(J @ fit.cov @ J, rel=1e-6)
        assert mw.statistic == pytest.approx(mw.estimate / math.sqrt(mw.variance), rel=1e-14)
        lo, hi = mw.natural_ci
        assert lo < mw.natural_estimate < hi
    assert marginal_wald(fit, small_trial, Estimand.RR).estimand == "logRR"


def test_marginal_estimates_rates():
    m = MarginalEstimates.from_rates(0.6, 0.4)
    assert (m.rd, m.rr, m.or_) == pytest.approx((0.2, 1.5, 2.25))
    assert m.value(Estimand.OR) == pytest.approx(2.25)
    with pytest.raises(DegenerateRate):
        MarginalEstimates.from_rates(1.0, 0.4)


@pytest.mark.parametrize("B, lo_k, hi_k", [(100, 3, 98), (1000, 25, 975), (5000, 125, 4875), (199, 5, 195)])
def test_percentile_order_statistics(B, lo_k, hi_k):
    v = np.random.default_rng(B).permutation(np.arange(1, B + 1, dtype=float))
    lo, hi = percentile_interval(v, 0.05)
    assert (lo, hi) == (lo_k, hi_k)


def test_resample_counts():
    c = resample_counts(7, 50, 40)
    assert c.shape == (40, 50) and np.all(c.sum(axis=1) == 50)
    assert np.array_equal(c, resample_counts(7, 50, 40))
    assert not np.array_equal(c, resample_counts(8, 50, 40))
    assert not np.array_equal(c, resample_counts(7, 50, 40, stream_index=1))
    # resample b does not depend on B
    assert np.array_equal(c[:10], resample_counts(7, 50, 10))


def test_bootstrap_matches_explicit_resampling(small_trial):
    counts = resample_counts(3, small_trial.n, 5)
    draws = draws_from_counts(small_trial, ModelSpec.ADJUSTED, counts)
    for b in range(5):
        idx = np.repeat(np.arange(small_trial.n), counts[b])
        sub = small_trial.take(idx)
        est = plug_in_estimates(fit_mle(sub, ModelSpec.ADJUSTED), sub)
        np.testing.assert_allclose(draws[b], [est.rd, est.rr, est.or_], rtol=1e-9)


def test_all_ones_counts_give_zero_width(small_trial):
    counts = np.ones((200, small_trial.n), dtype=int)
    for spec in ModelSpec:
        cis = cis_from_draws(draws_from_counts(small_trial, spec, counts))
        est = plug_in_estimates(fit_mle(small_trial, spec), small_trial)
        for e, ci in cis.items():
            assert ci.width == 0.0
            assert ci.lower == pytest.approx(est.value(e), rel=1e-12)


def test_bootstrap_determinism_byte_exact():
    assert _checks.bootstrap_is_byte_exact()


def test_bootstrap_ci_contains_estimate(small_trial):
    ci = bootstrap_ci(small_trial, ModelSpec.ADJUSTED, Estimand.RD, B=400, seed=1)
    est = plug_in_estimates(fit_mle(small_trial, ModelSpec.ADJUSTED), small_trial)
    assert ci.lower < est.rd < ci.upper
    assert ci.resamples_used + ci.resamples_discarded == 400
    with pytest.raises(OutOfRange):
        bootstrap_cis(small_trial, ModelSpec.ADJUSTED, B=50)


def test_failed_resamples_discarded_and_capped():
    # 12 rows, 1 event per arm: many resamples lose every event in an arm
    w = [0] * 6 + [1] * 6
    y = [1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0]
    d = TrialDataset.from_arrays(w, y, np.linspace(-1, 1, 12))
    draws = bootstrap_draws(d, ModelSpec.UNADJUSTED, 300, seed=5)
    assert np.isnan(draws).any()
    with pytest.raises(TooManyDiscards) as e:
        cis_from_draws(draws)
    assert e.value.requested == 300 and e.value.discarded == int(np.isnan(draws).any(1).sum())


def test_concordance_against_brute_force(rng):
    for _ in range(20):
        y = rng.integers(0, 2, 40)
        y[:2] = [0, 1]
        p = np.round(rng.random(40), 1)   # forces ties
        assert concordance_index(y, p) == pytest.approx(brute_concordance(y, p), abs=1e-14)
    with pytest.raises(DegenerateOutcomes):
        concordance_index([1, 1, 1], [0.1, 0.2, 0.3])


def test_analyze_report_structure(small_trial):
    rep = analyze(small_trial, bootstrap=200, seed=3)
    d = rep.to_dict()
    assert set(d["models"]) == {"unadjusted", "prog_score_adjusted"}
    cis = [ci for m in d["models"].values() for ci in m["bootstrap"].values()]
    assert len(cis) == 6
    for m in d["models"].values():
        assert set(m["marginal_wald"]) == {"RD", "logRR", "logOR"}
    dg = d["diagnostics"]
    assert dg["bias_factor"] == pytest.approx(dg["efficiency_factor"] ** 2)
    assert dg["wald_ratio"] == pytest.approx(
        d["models"]["unadjusted"]["treatment_wald"]["statistic"]
        / d["models"]["prog_score_adjusted"]["treatment_wald"]["statistic"])
    json.loads(rep.to_json())
    assert rep.bootstrap_csv().count("\n") == 1 + 2 * 200


def test_analyze_without_bootstrap(small_trial):
    d = analyze(small_trial, bootstrap=0, seed=None).to_dict()
    assert all("bootstrap" not in m for m in d["models"].values())
    with pytest.raises(OutOfRange):
        analyze(small_trial, bootstrap=500, seed=None)
    with pytest.raises(OutOfRange):
        analyze(small_trial, bootstrap=20, seed=1)
