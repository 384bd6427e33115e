"""G-computation for marginal risk difference, relative risk and odds ratio.

Every participant's event probability is predicted twice from the fitted
logistic model, once with treatment forced to 1 and once forced to 0.  The two
averages ``p1`` and ``p0`` give the plug-in estimates

    RD = p1 - p0,   RR = p1 / p0,   OR = [p1 / (1 - p1)] / [p0 / (1 - p0)].

Uncertainty comes either from the Delta method (Jacobian of the estimand with
respect to the coefficients, sandwiching the coefficient covariance) or from a
percentile bootstrap that resamples participants and refits.  Tests for RR and
OR run on the log scale.

The array helpers prefixed ``batch_`` work on a leading replication axis and
are shared with the simulation harness.
"""
from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .data import TrialDataset, arm_summary
from .design import bias_factor, efficiency_factor, profile_from_model
from .errors import (DegenerateOutcomes, DegenerateRate, NonPositiveVariance,
                     OutOfRange, TooManyDiscards)
from .logit import (FittedModel, ModelSpec, design_matrix, fit_batch, fit_mle,
                    predict_probs, wald_test)
from .normal import logistic, normal_cdf, normal_quantile

__all__ = [
    "Estimand", "MarginalEstimates", "MarginalWald", "BootstrapCI", "AnalysisReport",
    "plug_in_estimates", "jacobian_rd", "jacobian_log_rr", "jacobian_log_or",
    "marginal_wald", "bootstrap_draws", "bootstrap_ci", "bootstrap_cis",
    "percentile_interval", "concordance_index", "analyze",
]

REPORT_SCHEMA_VERSION = "1.0"


class Estimand(enum.Enum):
    RD = "RD"
    RR = "RR"
    OR = "OR"

    @property
    def analysis_name(self) -> str:
        """Name of the scale the Wald test runs on."""
        return {"RD": "RD", "RR": "logRR", "OR": "logOR"}[self.value]

    @property
    def log_scale(self) -> bool:
        return self is not Estimand.RD


# ---------------------------------------------------------------------------
# array core

@dataclass
class ArmAverages:
    """Averaged predictions and the derivative sums the Jacobians are built from.

    ``j01``/``j02`` average the logistic density under treatment/control;
    ``j21``/``j22`` are the same averages weighted by the score.
    """

    p1: np.ndarray
    p0: np.ndarray
    j01: np.ndarray
    j02: np.ndarray
    j21: np.ndarray
    j22: np.ndarray


def batch_arm_averages(coef, score, weights=None) -> ArmAverages:
    """Arm averages for coefficient rows ``coef`` (R, K) over scores (R, n) or (n,).

    ``weights`` are frequency counts per participant; the averages divide by
    the total count, which equals ``n`` for bootstrap resamples.
    """
    coef = np.atleast_2d(coef)
    score = np.asarray(score, dtype=float)
    K = coef.shape[1]
    b0, b1 = coef[:, :1], coef[:, 1:2]
    slope = coef[:, 2:3] if K == 3 else np.zeros_like(b0)
    lin = slope * score
    q1 = logistic(b0 + b1 + lin)
    q0 = logistic(b0 + lin)
    d1 = q1 * (1.0 - q1)
    d0 = q0 * (1.0 - q0)
    if weights is None:
        def avg(a):
            return np.broadcast_to(a, lin.shape).mean(-1)
    else:
        weights = np.asarray(weights, dtype=float)
        total = weights.sum(-1)

        def avg(a):
            return (weights * a).sum(-1) / total
    return ArmAverages(avg(q1), avg(q0), avg(d1), avg(d0), avg(score * d1), avg(score * d0))


def batch_estimates(a: ArmAverages):
    """Analysis-scale estimates (RD, logRR, logOR), each of shape (R,)."""
    return {
        Estimand.RD: a.p1 - a.p0,
        Estimand.RR: np.log(a.p1) - np.log(a.p0),
        Estimand.OR: (np.log(a.p1) - np.log1p(-a.p1)) - (np.log(a.p0) - np.log1p(-a.p0)),
    }


def batch_jacobians(a: ArmAverages, K: int):
    """Gradients of the three analysis-scale estimands, each (R, K)."""
    rd = np.stack([a.j01 - a.j02, a.j01, a.j21 - a.j22], axis=-1)
    c1, c0 = 1.0 / a.p1, 1.0 / a.p0
    lrr = np.stack([c1 * a.j01 - c0 * a.j02, c1 * a.j01, c1 * a.j21 - c0 * a.j22], axis=-1)
    o1, o0 = 1.0 / (a.p1 * (1.0 - a.p1)), 1.0 / (a.p0 * (1.0 - a.p0))
    lor = np.stack([o1 * a.j01 - o0 * a.j02, o1 * a.j01, o1 * a.j21 - o0 * a.j22], axis=-1)
    return {Estimand.RD: rd[:, :K], Estimand.RR: lrr[:, :K], Estimand.OR: lor[:, :K]}


def batch_delta_variances(jac, cov):
    return {e: np.einsum("rk,rkl,rl->r", J, cov, J) for e, J in jac.items()}


# ---------------------------------------------------------------------------
# point estimates

@dataclass(frozen=True)
class MarginalEstimates:
    p_bar_1: float
    p_bar_0: float
    rd: float
    rr: float
    or_: float

    @classmethod
    def from_rates(cls, p1: float, p0: float) -> "MarginalEstimates":
        if not (0.0 < p1 < 1.0 and 0.0 < p0 < 1.0):
            raise DegenerateRate(f"averaged probabilities must lie in (0, 1): p1={p1}, p0={p0}")
        return cls(p1, p0, p1 - p0, p1 / p0, (p1 / (1.0 - p1)) / (p0 / (1.0 - p0)))

    def value(self, estimand: Estimand) -> float:
        return {Estimand.RD: self.rd, Estimand.RR: self.rr, Estimand.OR: self.or_}[estimand]

    def to_dict(self) -> dict:
        return {"p_bar_1": self.p_bar_1, "p_bar_0": self.p_bar_0,
                "RD": self.rd, "RR": self.rr, "OR": self.or_}


def _averages(m: FittedModel, d: TrialDataset) -> ArmAverages:
    return batch_arm_averages(m.coef[None], d.prognostic_score)


def plug_in_estimates(m: FittedModel, d: TrialDataset) -> MarginalEstimates:
    a = _averages(m, d)
    return MarginalEstimates.from_rates(float(a.p1[0]), float(a.p0[0]))


def _jacobian(m, d, estimand):
    a = _averages(m, d)
    return batch_jacobians(a, len(m.coef))[estimand][0]


def jacobian_rd(m: FittedModel, d: TrialDataset) -> np.ndarray:
    """Gradient of the plug-in risk difference with respect to the coefficients."""
    return _jacobian(m, d, Estimand.RD)


def jacobian_log_rr(m: FittedModel, d: TrialDataset) -> np.ndarray:
    """Gradient of the plug-in log relative risk."""
    return _jacobian(m, d, Estimand.RR)


def jacobian_log_or(m: FittedModel, d: TrialDataset) -> np.ndarray:
    """Gradient of the plug-in log odds ratio.

    Chain rule through ``logit(p1) - logit(p0)``: each arm's gradient is
    scaled by ``1 / (p (1 - p))``.
    """
    return _jacobian(m, d, Estimand.OR)


@dataclass(frozen=True)
class MarginalWald:
    """Delta-method Wald test; ``estimate`` and ``ci`` are on the analysis scale."""

    estimand: str
    estimate: float
    variance: float
    statistic: float
    p_value: float
    ci: tuple[float, float]

    @property
    def natural_estimate(self) -> float:
        return self.estimate if self.estimand == "RD" else math.exp(self.estimate)

    @property
    def natural_ci(self) -> tuple[float, float]:
        if self.estimand == "RD":
            return self.ci
        return (math.exp(self.ci[0]), math.exp(self.ci[1]))

    def to_dict(self) -> dict:
        return {"estimand": self.estimand, "estimate": self.estimate,
                "variance": self.variance, "std_error": math.sqrt(self.variance),
                "statistic": self.statistic, "p_value": self.p_value,
                "ci": list(self.ci), "natural_estimate": self.natural_estimate,
                "natural_ci": list(self.natural_ci)}


def marginal_wald(m: FittedModel, d: TrialDataset, estimand: Estimand,
                  alpha: float = 0.05) -> MarginalWald:
    """Wald test of no effect (RD = 0, log RR = 0 or log OR = 0)."""
    if not 0.0 < alpha < 1.0:
        raise OutOfRange("alpha must lie in (0, 1)")
    estimand = Estimand(estimand)
    a = _averages(m, d)
    est = float(batch_estimates(a)[estimand][0])
    J = batch_jacobians(a, len(m.coef))[estimand][0]
    var = float(J @ m.cov @ J)
    if not (math.isfinite(var) and var > 0.0):
        raise NonPositiveVariance(f"Delta-method variance for {estimand.analysis_name} is {var!r}")
    se = math.sqrt(var)
    z = est / se
    half = normal_quantile(1.0 - alpha / 2.0) * se
    return MarginalWald(estimand.analysis_name, est, var, z,
                        min(1.0, 2.0 * normal_cdf(-abs(z))), (est - half, est + half))


# ---------------------------------------------------------------------------
# bootstrap

def resample_counts(seed: int, n: int, B: int, stream_index: int = 0) -> np.ndarray:
    """Row multiplicities (B, n) of ``B`` simple resamples of ``n`` rows.

    Resample ``b`` uses draws ``b*n .. (b+1)*n - 1`` of the bootstrap stream
    keyed by ``(seed, stream_index)``.
    """
    idx = rng.indices(rng.stream(seed, "bootstrap", stream_index), n, B * n).reshape(B, n)
    flat = (idx + n * np.arange(B)[:, None]).ravel()
    return np.bincount(flat, minlength=B * n).reshape(B, n)


def draws_from_counts(d: TrialDataset, spec: ModelSpec, counts, max_iter: int = 100) -> np.ndarray:
    """Refit on each weighted resample; natural-scale (RD, RR, OR) per row, NaN on failure."""
    return array_draws(d.treatment, d.outcome, d.prognostic_score, spec, counts, max_iter)


def array_draws(treatment, outcome, score, spec: ModelSpec, counts, max_iter: int = 100):
    counts = np.asarray(counts, dtype=float)
    XT = design_matrix(spec, treatment, score)
    fit = fit_batch(XT, np.asarray(outcome, dtype=float), weights=counts, max_iter=max_iter)
    out = np.full((counts.shape[0], 3), np.nan)
    ok = fit.ok
    if ok.any():
        a = batch_arm_averages(fit.coef[ok], score, counts[ok])
        good = (a.p1 > 0) & (a.p1 < 1) & (a.p0 > 0) & (a.p0 < 1)
        rows = np.flatnonzero(ok)[good]
        p1, p0 = a.p1[good], a.p0[good]
        out[rows, 0] = p1 - p0
        out[rows, 1] = p1 / p0
        out[rows, 2] = (p1 / (1.0 - p1)) / (p0 / (1.0 - p0))
    return out


def bootstrap_draws(d: TrialDataset, spec: ModelSpec, B: int, seed: int,
                    stream_index: int = 0) -> np.ndarray:
    """Bootstrap replicates of (RD, RR, OR); failed resamples are NaN rows."""
    if B < 1:
        raise OutOfRange("B must be positive")
    return draws_from_counts(d, spec, resample_counts(seed, d.n, B, stream_index))


def percentile_interval(values, alpha: float = 0.05) -> tuple[float, float]:
    """Order statistics ``ceil(B q)`` for ``q = alpha/2`` and ``1 - alpha/2``, no interpolation."""
    v = np.sort(np.asarray(values, dtype=float))
    B = v.size

    def pick(q):
        k = max(1, math.ceil(round(B * q, 9)))
        return float(v[min(k, B) - 1])

    return pick(alpha / 2.0), pick(1.0 - alpha / 2.0)


@dataclass(frozen=True)
class BootstrapCI:
    estimand: str
    level: float
    lower: float
    upper: float
    resamples_used: int
    resamples_discarded: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {"estimand": self.estimand, "level": self.level, "lower": self.lower,
                "upper": self.upper, "width": self.width,
                "resamples_used": self.resamples_used,
                "resamples_discarded": self.resamples_discarded}


_COLUMN = {Estimand.RD: 0, Estimand.RR: 1, Estimand.OR: 2}


def cis_from_draws(draws, alpha: float = 0.05) -> dict:
    B = draws.shape[0]
    good = ~np.isnan(draws).any(axis=1)
    used = int(good.sum())
    if B - used > 0.01 * B:
        raise TooManyDiscards(B - used, B)
    out = {}
    for e, col in _COLUMN.items():
        lo, hi = percentile_interval(draws[good, col], alpha)
        out[e] = BootstrapCI(e.value, 1.0 - alpha, lo, hi, used, B - used)
    return out


def bootstrap_cis(d: TrialDataset, spec: ModelSpec, B: int = 5000, alpha: float = 0.05,
                  seed: int = 0, stream_index: int = 0) -> dict:
    """Percentile intervals for all three estimands from one set of resamples."""
    if B < 100:
        raise OutOfRange("bootstrap needs B >= 100")
    if not 0.0 < alpha < 1.0:
        raise OutOfRange("alpha must lie in (0, 1)")
    return cis_from_draws(bootstrap_draws(d, spec, B, seed, stream_index), alpha)


def bootstrap_ci(d: TrialDataset, spec: ModelSpec, estimand: Estimand, B: int = 5000,
                 alpha: float = 0.05, seed: int = 0) -> BootstrapCI:
    """Nonparametric percentile bootstrap interval on the natural scale.

    Rows are resampled without stratification and the model refitted.
    Resamples that fail (separation, an empty arm, non-convergence) are
    discarded, not redrawn; more than 1% failures raise
    :class:`TooManyDiscards`.
    """
    return bootstrap_cis(d, spec, B, alpha, seed)[Estimand(estimand)]


# ---------------------------------------------------------------------------
# discrimination

def concordance_index(outcomes, probs) -> float:
    """Share of (event, non-event) pairs ranked correctly; ties count one half."""
    y = np.asarray(outcomes)
    p = np.asarray(probs, dtype=float)
    if y.shape != p.shape:
        raise OutOfRange("outcomes and probs must have the same length")
    n1 = int((y == 1).sum())
    n0 = int((y == 0).sum())
    if n1 == 0 or n0 == 0:
        raise DegenerateOutcomes("need at least one event and one non-event")
    _, inverse, counts = np.unique(p, return_inverse=True, return_counts=True)
    start = np.cumsum(counts) - counts
    midrank = start + (counts + 1) / 2.0
    rank_sum = midrank[inverse][y == 1].sum()
    return float((rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0))


# ---------------------------------------------------------------------------
# full analysis

@dataclass(eq=False)
class AnalysisReport:
    """Both models, coefficient and marginal inference, and diagnostics."""

    n: int
    alpha: float
    seed: int | None
    bootstrap_resamples: int
    arms: dict
    models: dict
    diagnostics: dict
    draws: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "n": self.n,
            "alpha": self.alpha,
            "seed": self.seed,
            "bootstrap_resamples": self.bootstrap_resamples,
            "arms": self.arms,
            "models": self.models,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        return json.dumps(self.to_dict(), allow_nan=False, **kw)

    def bootstrap_csv(self) -> str:
        """Per-resample estimates for audit; empty when no bootstrap was run."""
        buf = io.StringIO()
        buf.write("model,resample,RD,RR,OR\n")
        for model, draws in self.draws.items():
            for b, row in enumerate(draws):
                vals = ",".join("" if np.isnan(v) else repr(float(v)) for v in row)
                buf.write(f"{model},{b},{vals}\n")
        return buf.getvalue()


def analyze(d: TrialDataset, alpha: float = 0.05, bootstrap: int = 5000,
            seed: int | None = 0, max_iter: int = 100) -> AnalysisReport:
    """Fit both models and collect every inference the package offers.

    ``bootstrap=0`` skips the resampling step; otherwise ``seed`` must be set
    and ``bootstrap >= 100``.  Both models see the same resamples.
    """
    if bootstrap and seed is None:
        raise OutOfRange("a seed is required when bootstrapping")
    if bootstrap and bootstrap < 100:
        raise OutOfRange("bootstrap needs B >= 100 (or 0 to skip)")
    control, active = arm_summary(d)
    arms = {"control": vars(control).copy(), "active": vars(active).copy()}

    fits = {spec: fit_mle(d, spec, max_iter=max_iter) for spec in ModelSpec}
    models, beta_wald, marg_wald, draws = {}, {}, {}, {}
    for spec, fit in fits.items():
        block = fit.to_dict()
        beta_wald[spec] = wald_test(fit, 1, 0.0, alpha)
        block["treatment_wald"] = beta_wald[spec].to_dict()
        block["marginal_estimates"] = plug_in_estimates(fit, d).to_dict()
        marg_wald[spec] = {e: marginal_wald(fit, d, e, alpha) for e in Estimand}
        block["marginal_wald"] = {e.analysis_name: w.to_dict() for e, w in marg_wald[spec].items()}
        if bootstrap:
            dr = bootstrap_draws(d, spec, bootstrap, seed)
            draws[spec.value] = dr
            cis = cis_from_draws(dr, alpha)
            block["bootstrap"] = {e.value: ci.to_dict() for e, ci in cis.items()}
        models[spec.value] = block

    adj = fits[ModelSpec.ADJUSTED]
    profile = profile_from_model(adj.coef[0], adj.coef[2], d.prognostic_score)
    un, pl = ModelSpec.UNADJUSTED, ModelSpec.ADJUSTED

    def ratio(a, b):
        return float(a / b) if b != 0 else None

    try:
        cidx = concordance_index(d.outcome, predict_probs(adj, d))
    except DegenerateOutcomes:
        cidx = None
    diagnostics = {
        "mean_mu": profile.mean_mu,
        "var_mu": profile.var_mu,
        "efficiency_factor": efficiency_factor(profile),
        "bias_factor": bias_factor(profile),
        "wald_ratio": ratio(beta_wald[un].statistic, beta_wald[pl].statistic),
        "marginal_wald_ratio": {
            e.analysis_name: ratio(marg_wald[un][e].statistic, marg_wald[pl][e].statistic)
            for e in Estimand
        },
        "coefficient_ratio": ratio(fits[un].coef[1], adj.coef[1]),
        "variance_ratio": float(fits[un].cov[1, 1] / adj.cov[1, 1]),
        "concordance_index": cidx,
    }
    return AnalysisReport(d.n, alpha, seed, int(bootstrap), arms, models, diagnostics, draws)
