"""Oracle and property checks shared by the unit tests and the acceptance run.

Each function returns the worst discrepancy it found so callers can both
assert and report it.
"""
import json

import numpy as np

from prognostic_logit import TrialDataset, analyze
from prognostic_logit.gcomp import (Estimand, bootstrap_draws, jacobian_log_or, jacobian_log_rr,
                                    jacobian_rd, marginal_wald, plug_in_estimates)
from prognostic_logit.logit import ModelSpec, design_matrix, fit_mle
from prognostic_logit.normal import normal_cdf, normal_quantile

from _oracles import central_difference_jacobian, grid_search_mle, plug_in, woolf_se
from conftest import random_dataset


def mle_grid_max_error(n_datasets=50, seed=2024):
    """Largest |IRLS - grid search| coefficient difference over random small datasets."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_datasets):
        d = random_dataset(rng, int(rng.integers(30, 61)), beta=(rng.normal(0, 0.5), rng.normal(0.5, 0.5), 1.0))
        spec = ModelSpec.ADJUSTED if k % 2 == 0 else ModelSpec.UNADJUSTED
        fit = fit_mle(d, spec)
        X = design_matrix(spec, d.treatment, d.prognostic_score).T
        ref = grid_search_mle(X, d.outcome.astype(float))
        worst = max(worst, float(np.max(np.abs(fit.coef - ref))))
    return worst


_JAC = {Estimand.RD: (jacobian_rd, 0), Estimand.RR: (jacobian_log_rr, 1), Estimand.OR: (jacobian_log_or, 2)}


def jacobian_max_rel_error(n_fits=100, seed=77):
    """Largest max-norm relative gap between analytic and central-difference Jacobians."""
    rng = np.random.default_rng(seed)
    worst = {e: 0.0 for e in Estimand}
    for k in range(n_fits):
        d = random_dataset(rng, int(rng.integers(60, 200)),
                           beta=(rng.normal(0, 1), rng.normal(0.5, 0.7), rng.normal(1, 0.5)))
        spec = ModelSpec.ADJUSTED if k % 4 else ModelSpec.UNADJUSTED
        fit = fit_mle(d, spec)
        m = d.prognostic_score if spec is ModelSpec.ADJUSTED else None
        for e, (fn, col) in _JAC.items():
            fd = central_difference_jacobian(lambda b: plug_in(b, None, m)[col], fit.coef)
            an = fn(fit, d)
            worst[e] = max(worst[e], float(np.max(np.abs(an - fd)) / np.max(np.abs(fd))))
    return worst


def shift_invariance_max_error(n_datasets=20, seed=5):
    """Adding a constant to every score must not move the treatment inference."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_datasets):
        d = random_dataset(rng, 150)
        c = float(rng.uniform(-5, 5))
        a = fit_mle(d, ModelSpec.ADJUSTED)
        b = fit_mle(d.with_scores(d.prognostic_score + c), ModelSpec.ADJUSTED)
        gaps = [a.coef[1] - b.coef[1], a.coef[2] - b.coef[2],
                a.coef[0] - (b.coef[0] + b.coef[2] * c),
                a.std_errors[1] - b.std_errors[1]]
        ea, eb = plug_in_estimates(a, d), plug_in_estimates(b, d.with_scores(d.prognostic_score + c))
        gaps += [ea.rd - eb.rd, ea.rr - eb.rr, ea.or_ - eb.or_]
        for e in Estimand:
            gaps.append(marginal_wald(a, d, e).statistic
                        - marginal_wald(b, d.with_scores(d.prognostic_score + c), e).statistic)
        worst = max(worst, float(np.max(np.abs(gaps))))
    return worst


def round_trip_max_error():
    """Worst of |Phi(Phi^-1(p)) - p| and |Phi^-1(Phi(x)) - x| on dense grids."""
    p = np.concatenate([np.logspace(-300, -1, 600), np.linspace(0.1, 0.9, 801), 1 - np.logspace(-12, -1, 200)])
    x = np.linspace(-8.0, 4.0, 1201)
    return max(float(np.max(np.abs(normal_cdf(normal_quantile(p)) - p))),
               float(np.max(np.abs(normal_quantile(normal_cdf(x)) - x))))


def saturated_max_error(tables=((10, 20, 15, 20), (3, 17, 11, 12), (40, 60, 22, 78), (1, 10, 8, 10))):
    """Unadjusted model on a 2x2 table against closed forms.

    Each table is (control events, control n, active events, active n).
    """
    worst = 0.0
    for e0, n0, e1, n1 in tables:
        w = np.repeat([0, 0, 1, 1], [e0, n0 - e0, e1, n1 - e1])
        y = np.repeat([1, 0, 1, 0], [e0, n0 - e0, e1, n1 - e1])
        d = TrialDataset.from_arrays(w, y, np.zeros(w.size))
        fit = fit_mle(d, ModelSpec.UNADJUSTED)
        p0, p1 = e0 / n0, e1 / n1
        lor = np.log(p1 / (1 - p1)) - np.log(p0 / (1 - p0))
        se = woolf_se(e0, n0 - e0, e1, n1 - e1)
        est = plug_in_estimates(fit, d)
        mw = {e: marginal_wald(fit, d, e) for e in Estimand}
        gaps = [
            fit.coef[0] - np.log(p0 / (1 - p0)), fit.coef[1] - lor, fit.std_errors[1] - se,
            est.p_bar_1 - p1, est.p_bar_0 - p0, est.rd - (p1 - p0), est.rr - p1 / p0,
            mw[Estimand.RD].variance - (p1 * (1 - p1) / n1 + p0 * (1 - p0) / n0),
            mw[Estimand.RR].variance - ((1 - p1) / (n1 * p1) + (1 - p0) / (n0 * p0)),
            mw[Estimand.OR].variance - se ** 2,
            mw[Estimand.OR].estimate - lor,
        ]
        worst = max(worst, float(np.max(np.abs(gaps))))
    return worst


def bootstrap_is_byte_exact(seed=99):
    d = random_dataset(np.random.default_rng(seed), 200)
    same = True
    for spec in ModelSpec:
        a = bootstrap_draws(d, spec, 300, seed=4242)
        b = bootstrap_draws(d, spec, 300, seed=4242)
        same &= a.tobytes() == b.tobytes()
    r1 = analyze(d, bootstrap=200, seed=11).to_json()
    r2 = analyze(d, bootstrap=200, seed=11).to_json()
    return bool(same and r1 == r2 and json.loads(r1)["seed"] == 11)
