"""Monte Carlo harness for the operating characteristics of both analyses.

A :class:`ScenarioSpec` fixes a data-generating mechanism.  Each replication
draws covariates, assigns exactly ``n/2`` participants to each arm, draws
outcomes, then fits the unadjusted and the score-adjusted model and records
coefficient tests, g-computation estimates and Delta-method tests, the
realized efficiency factor, and (for a leading subset of replications)
bootstrap interval widths.

Replication ``r`` draws only from streams keyed by ``(seed, r)``, and
replications are processed in fixed-size blocks whose results are assembled
in index order.  Aggregates therefore do not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np

from . import rng
from .data import TrialDataset
from .errors import ExcessiveFailureRate, OutOfRange, UnknownScenario
from .gcomp import (Estimand, MarginalEstimates, array_draws, batch_arm_averages,
                    batch_delta_variances, batch_estimates, batch_jacobians,
                    percentile_interval, resample_counts)
from .logit import ModelSpec, design_matrix, fit_batch
from .normal import logistic, normal_quantile

__all__ = [
    "UnivariateNormal", "BivariateNormal", "LinearPredictor", "ScenarioSpec",
    "TrueEstimands", "ScenarioResult", "Table", "builtin_scenarios", "get_scenario",
    "load_scenario", "generate_trial", "run_scenario", "summarize",
    "analytic_profile", "trimmed_mean", "json_safe", "default_threads", "RESULT_SCHEMA_VERSION",
]

RESULT_SCHEMA_VERSION = "1.0"
BLOCK_SIZE = 250
FAILURE_CEILING = 0.01
TRIM = 0.01
ENV_THREADS = "PROGNOSTIC_LOGIT_THREADS"

MODELS = ("UN", "P-LR")
TESTS = ("beta1", "RD", "logRR")


@dataclass(frozen=True)
class UnivariateNormal:
    """Prognostic score ``m ~ Normal(mean, sd**2)``; no hidden covariate."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise OutOfRange("sd must be positive")


@dataclass(frozen=True)
class BivariateNormal:
    """``(m, x)`` jointly normal; ``x`` drives outcomes but is hidden from the analyses."""

    mean: tuple
    cov: tuple

    def __post_init__(self):
        c = np.asarray(self.cov, dtype=float)
        if c.shape != (2, 2) or len(self.mean) != 2:
            raise OutOfRange("bivariate covariates need a length-2 mean and a 2x2 covariance")
        if c[0, 1] != c[1, 0] or c[0, 0] <= 0 or np.linalg.det(c) <= 0:
            raise OutOfRange("covariance matrix must be symmetric positive definite")
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in c))


@dataclass(frozen=True)
class LinearPredictor:
    """``logit Pr(y = 1) = intercept + treatment*w + m_coef*m + x_coef*x``."""

    intercept: float = 0.0
    treatment: float = 0.0
    m_coef: float = 0.0
    x_coef: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    """One data-generating mechanism plus run settings.

    ``null_mode`` forces the treatment coefficient to zero for Type I error
    runs.  Bootstrap interval widths are computed for the first
    ``bootstrap_replications`` replications with ``bootstrap_resamples``
    resamples each; set either to 0 to skip them.
    """

    name: str
    covariates: Union[UnivariateNormal, BivariateNormal]
    predictor: LinearPredictor
    n: int
    replications: int = 5000
    seed: int = 20240521
    null_mode: bool = False
    alpha: float = 0.05
    bootstrap_replications: int = 500
    bootstrap_resamples: int = 1000

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise OutOfRange("n must be an even number of at least 4")
        if self.replications < 1:
            raise OutOfRange("replications must be at least 1")
        if not 0 < self.alpha < 1:
            raise OutOfRange("alpha must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise OutOfRange("seed must be a 64-bit unsigned integer")
        if self.bootstrap_replications < 0 or self.bootstrap_resamples < 0:
            raise OutOfRange("bootstrap settings must be non-negative")
        if self.bootstrap_replications and 0 < self.bootstrap_resamples < 100:
            raise OutOfRange("bootstrap_resamples must be 0 or at least 100")

    @property
    def slug(self) -> str:
        return self.name.lower().replace(" ", "-")

    @property
    def treatment_effect(self) -> float:
        return 0.0 if self.null_mode else self.predictor.treatment

    def to_dict(self) -> dict:
        out = asdict(self)
        kind = "univariate_normal" if isinstance(self.covariates, UnivariateNormal) else "bivariate_normal"
        out["covariates"] = {"kind": kind, **asdict(self.covariates)}
        if kind == "bivariate_normal":
            out["covariates"]["mean"] = list(self.covariates.mean)
            out["covariates"]["cov"] = [list(r) for r in self.covariates.cov]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioSpec":
        raw = dict(raw)
        cov = dict(raw.pop("covariates"))
        kind = cov.pop("kind", "univariate_normal" if "sd" in cov else "bivariate_normal")
        if kind == "univariate_normal":
            covariates = UnivariateNormal(float(cov["mean"]), float(cov["sd"]))
        elif kind == "bivariate_normal":
            covariates = BivariateNormal(tuple(cov["mean"]), tuple(tuple(r) for r in cov["cov"]))
        else:
            raise OutOfRange(f"unknown covariate model {kind!r}")
        predictor = LinearPredictor(**raw.pop("predictor"))
        return cls(covariates=covariates, predictor=predictor, **raw)


_BASE = dict(covariates=UnivariateNormal(0.0, 1.5), n=500)


def builtin_scenarios() -> list[ScenarioSpec]:
    """The seven mechanisms: four well specified, three misspecified."""
    rand_cov = ((3.25, 2.25), (2.25, 2.25))
    return [
        ScenarioSpec("Baseline", UnivariateNormal(0.0, 1.5), LinearPredictor(1.0, 0.75, 1.0), 500),
        ScenarioSpec("Large Effect", UnivariateNormal(0.0, 1.5), LinearPredictor(1.0, 0.85, 1.0), 500),
        ScenarioSpec("Large Variance", UnivariateNormal(0.0, 2.5), LinearPredictor(1.0, 0.75, 1.0), 500),
        ScenarioSpec("High Prevalence", UnivariateNormal(0.0, 2.0), LinearPredictor(2.5, 0.75, 1.0), 800),
        ScenarioSpec("Omitted Covariate", BivariateNormal((0.0, 0.0), ((2.25, 1.0), (1.0, 2.25))),
                     LinearPredictor(0.0, 0.75, 1.0, 1.0), 800),
        ScenarioSpec("Random Error", BivariateNormal((1.0, 1.0), rand_cov),
                     LinearPredictor(0.0, 0.75, 0.0, 1.0), 500),
        ScenarioSpec("Shift and Random Error", BivariateNormal((1.5, 1.0), rand_cov),
                     LinearPredictor(0.0, 0.75, 0.0, 1.0), 500),
    ]


def get_scenario(name: str, **overrides) -> ScenarioSpec:
    """Built-in scenario by display name or slug (``"baseline"``, ``"random-error"``...)."""
    key = name.lower().replace("_", "-").replace(" ", "-")
    for s in builtin_scenarios():
        if s.slug == key:
            return replace(s, **overrides)
    raise UnknownScenario(name, [s.slug for s in builtin_scenarios()])


def load_scenario(path) -> ScenarioSpec:
    """Read a :class:`ScenarioSpec` from a ``.json`` or ``.toml`` file."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        raw = json.loads(path.read_text(encoding="utf-8"))
    return ScenarioSpec.from_dict(raw.get("scenario", raw))


# ---------------------------------------------------------------------------
# data generation

def _draw_covariates(s: ScenarioSpec, rep: int):
    bg = rng.stream(s.seed, "covariates", rep)
    cv = s.covariates
    if isinstance(cv, UnivariateNormal):
        return cv.mean + cv.sd * rng.normals(bg, s.n), None
    z = rng.normals(bg, 2 * s.n).reshape(2, s.n)
    c = np.asarray(cv.cov)
    l11 = math.sqrt(c[0, 0])
    l21 = c[1, 0] / l11
    l22 = math.sqrt(c[1, 1] - l21 ** 2)
    m = cv.mean[0] + l11 * z[0]
    x = cv.mean[1] + l21 * z[0] + l22 * z[1]
    return m, x


def _linear_predictor(s: ScenarioSpec, w, m, x):
    lp = s.predictor
    eta = lp.intercept + s.treatment_effect * w + lp.m_coef * m
    if x is not None:
        eta = eta + lp.x_coef * x
    return eta


def _simulate(s: ScenarioSpec, rep: int):
    m, x = _draw_covariates(s, rep)
    order = np.argsort(rng.stream(s.seed, "assignment", rep).random_raw(s.n), kind="stable")
    w = np.zeros(s.n)
    w[order[: s.n // 2]] = 1.0
    p = logistic(_linear_predictor(s, w, m, x))
    y = (rng.uniforms(rng.stream(s.seed, "outcomes", rep), s.n) < p).astype(float)
    p1 = float(logistic(_linear_predictor(s, np.ones(s.n), m, x)).mean())
    p0 = float(logistic(_linear_predictor(s, np.zeros(s.n), m, x)).mean())
    return w, y, m, p1, p0


@dataclass(frozen=True)
class TrueEstimands:
    """Super-population marginal estimands given the drawn covariates.

    Averages of the true event probabilities with everyone treated and with
    everyone on control; no potential outcomes are sampled.
    """

    p1: float
    p0: float
    rd: float
    rr: float
    or_: float


def generate_trial(s: ScenarioSpec, replication_index: int) -> tuple[TrialDataset, TrueEstimands]:
    """Replication ``replication_index`` of scenario ``s``.

    The dataset exposes only treatment, outcome and the prognostic score;
    a hidden covariate never reaches the analyses.
    """
    w, y, m, p1, p0 = _simulate(s, replication_index)
    est = MarginalEstimates.from_rates(p1, p0)
    return (TrialDataset.from_arrays(w.astype(int), y.astype(int), m),
            TrueEstimands(p1, p0, est.rd, est.rr, est.or_))


# ---------------------------------------------------------------------------
# per-block analysis

_SPECS = {"UN": ModelSpec.UNADJUSTED, "P-LR": ModelSpec.ADJUSTED}


def _run_block(s: ScenarioSpec, start: int, stop: int) -> dict:
    reps = range(start, stop)
    sims = [_simulate(s, r) for r in reps]
    W = np.stack([t[0] for t in sims])
    Y = np.stack([t[1] for t in sims])
    M = np.stack([t[2] for t in sims])
    true_p1 = np.array([t[3] for t in sims])
    true_p0 = np.array([t[4] for t in sims])
    R = len(sims)
    out = {"true_p1": true_p1, "true_p0": true_p0, "ok": np.ones(R, dtype=bool)}

    for label, spec in _SPECS.items():
        fit = fit_batch(design_matrix(spec, W, M), Y)
        out["ok"] &= fit.ok
        coef = np.where(fit.ok[:, None], fit.coef, 0.0)
        cov = np.where(fit.ok[:, None, None], fit.cov, np.eye(spec.n_coef))
        a = batch_arm_averages(coef, M)
        est = batch_estimates(a)
        var = batch_delta_variances(batch_jacobians(a, spec.n_coef), cov)
        out[f"{label}/beta1"] = coef[:, 1]
        out[f"{label}/var_beta1"] = cov[:, 1, 1]
        out[f"{label}/z/beta1"] = coef[:, 1] / np.sqrt(cov[:, 1, 1])
        for e in Estimand:
            out[f"{label}/z/{e.analysis_name}"] = est[e] / np.sqrt(var[e])
        out[f"{label}/est/RD"] = a.p1 - a.p0
        out[f"{label}/est/RR"] = a.p1 / a.p0
        out[f"{label}/est/OR"] = (a.p1 / (1 - a.p1)) / (a.p0 / (1 - a.p0))
        if spec is ModelSpec.ADJUSTED:
            mu = logistic(coef[:, :1] + coef[:, 2:3] * M)
            e_mu = mu.mean(-1)
            v_mu = ((mu - e_mu[:, None]) ** 2).mean(-1)
            out["e_mu"] = e_mu
            out["var_mu"] = v_mu
            out["bias_factor_formula"] = 1.0 - v_mu / (e_mu * (1.0 - e_mu))

    nb = min(stop, s.bootstrap_replications) - start
    widths = {f"{label}/width/{e.value}": np.full(R, np.nan) for label in MODELS for e in Estimand}
    discards = {label: np.zeros(R, dtype=np.int64) for label in MODELS}
    if s.bootstrap_resamples and nb > 0:
        for i in range(nb):
            if not out["ok"][i]:
                continue
            counts = resample_counts(s.seed, s.n, s.bootstrap_resamples, start + i)
            for label, spec in _SPECS.items():
                draws = array_draws(W[i], Y[i], M[i], spec, counts)
                good = ~np.isnan(draws).any(axis=1)
                discards[label][i] = int((~good).sum())
                for e, col in zip(Estimand, range(3)):
                    lo, hi = percentile_interval(draws[good, col], s.alpha)
                    widths[f"{label}/width/{e.value}"][i] = hi - lo
    out.update(widths)
    for label in MODELS:
        out[f"{label}/boot_discards"] = discards[label]
    return out


def _collect(s: ScenarioSpec, threads: int = 1) -> dict:
    bounds = [(a, min(a + BLOCK_SIZE, s.replications)) for a in range(0, s.replications, BLOCK_SIZE)]
    if threads > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_block, [s] * len(bounds), *zip(*bounds)))
    else:
        parts = [_run_block(s, a, b) for a, b in bounds]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


# ---------------------------------------------------------------------------
# aggregation

def trimmed_mean(x, proportion: float = TRIM) -> float:
    """Mean after dropping ``floor(proportion * len)`` values from each end."""
    x = np.sort(np.asarray(x, dtype=float))
    k = int(math.floor(proportion * x.size))
    return float(x[k: x.size - k].mean()) if x.size > 2 * k else float("nan")


def _moments(x) -> dict:
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = float(x.std(ddof=1)) if n > 1 else float("nan")
    return {"mean": float(x.mean()), "sd": sd, "mc_se": sd / math.sqrt(n)}


def _rate(flags) -> dict:
    p = float(np.mean(flags))
    return {"rate": p, "mc_se": math.sqrt(p * (1.0 - p) / flags.size)}


@dataclass
class ScenarioResult:
    """Aggregated metrics for one scenario (rates are fractions, not percent)."""

    scenario: dict
    replications: int
    failures: int
    rejection: dict
    wald_ratio: dict
    estimands: dict
    efficiency: dict
    bias_factor: dict
    null_rd_difference: dict
    bootstrap: dict
    per_replication: dict = field(default_factory=dict, repr=False)

    @property
    def name(self) -> str:
        return self.scenario["name"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("per_replication")
        d["schema_version"] = RESULT_SCHEMA_VERSION
        return d

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        return json.dumps(json_safe(self.to_dict()), allow_nan=False, **kw)


def json_safe(obj):
    """Replace non-finite floats by ``None`` so the result is strict JSON."""
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def run_scenario(s: ScenarioSpec, threads: int = 1, keep_replications: bool = False) -> ScenarioResult:
    """Simulate ``s.replications`` trials and aggregate every metric.

    Replications where either model fails to fit are excluded and counted;
    more than 1% failures raise :class:`ExcessiveFailureRate`.
    """
    raw = _collect(s, threads)
    ok = raw["ok"]
    failures = int((~ok).sum())
    if failures > FAILURE_CEILING * s.replications:
        raise ExcessiveFailureRate(failures, s.replications)
    v = {k: a[ok] for k, a in raw.items()}
    z = normal_quantile(1.0 - s.alpha / 2.0)

    rejection = {label: {t: _rate(np.abs(v[f"{label}/z/{t}"]) > z) for t in TESTS} for label in MODELS}

    wald_ratio = {}
    for t in TESTS:
        r = v[f"UN/z/{t}"] / v[f"P-LR/z/{t}"]
        r = r[np.isfinite(r)]
        wald_ratio[t] = {**_moments(r), "trimmed_mean": trimmed_mean(r),
                         "median": float(np.median(r)), "trim_proportion_each_tail": TRIM}

    tp1, tp0 = v["true_p1"], v["true_p0"]
    truth = {"RD": tp1 - tp0, "RR": tp1 / tp0, "OR": (tp1 / (1 - tp1)) / (tp0 / (1 - tp0))}
    estimands = {}
    for e in ("OR", "RR", "RD"):
        block = {"value": _moments(truth[e])}
        for label in MODELS:
            est = v[f"{label}/est/{e}"]
            dev = _moments(est - truth[e])
            width = v[f"{label}/width/{e}"]
            width = width[~np.isnan(width)]
            block[label] = {
                "mean_deviation": dev["mean"], "deviation_mc_se": dev["mc_se"],
                "sd_of_estimator": float(est.std(ddof=1)) if est.size > 1 else float("nan"),
                "mean_ci_width": float(width.mean()) if width.size else float("nan"),
                "ci_width_sd": float(width.std(ddof=1)) if width.size > 1 else float("nan"),
            }
        wu, wp = v[f"UN/width/{e}"], v[f"P-LR/width/{e}"]
        both = ~np.isnan(wu) & ~np.isnan(wp)
        if both.any():
            ratio = _moments(wp[both] / wu[both])
            block["width_ratio"] = {**ratio, "of_means": float(wp[both].mean() / wu[both].mean()),
                                    "replications": int(both.sum())}
        else:
            block["width_ratio"] = None
        estimands[e] = block

    f = np.sqrt(v["bias_factor_formula"])
    efficiency = {
        "e_mu": _moments(v["e_mu"]),
        "var_mu": _moments(v["var_mu"]),
        "f_eff": _moments(f),
        "f_eff_squared": _moments(f ** 2),
    }
    coef_ratio = v["UN/beta1"] / v["P-LR/beta1"]
    coef_ratio = coef_ratio[np.isfinite(coef_ratio)]
    var_ratio = v["UN/var_beta1"] / v["P-LR/var_beta1"]
    bias = {
        "coefficient_ratio": {**_moments(coef_ratio), "trimmed_mean": trimmed_mean(coef_ratio)},
        "variance_ratio": _moments(var_ratio),
        "variance_ratio_minus_f_squared": _moments(var_ratio - f ** 2),
        "formula": _moments(v["bias_factor_formula"]),
    }
    null_rd = _moments(v["P-LR/est/RD"] - v["UN/est/RD"])
    bootstrap = {
        "replications": int(min(s.bootstrap_replications, s.replications)) if s.bootstrap_resamples else 0,
        "resamples": s.bootstrap_resamples,
        "discarded": {label: int(raw[f"{label}/boot_discards"].sum()) for label in MODELS},
    }
    return ScenarioResult(s.to_dict(), s.replications, failures, rejection, wald_ratio,
                          estimands, efficiency, bias, null_rd, bootstrap,
                          v if keep_replications else {})


def analytic_profile(s: ScenarioSpec, nodes: int = 96):
    """Population ``(E(mu0), Var(mu0))`` from the true control-arm model on ``m``.

    Only defined for univariate scenarios, where the analysis model is the
    true model.  Gauss-Hermite quadrature.
    """
    if not isinstance(s.covariates, UnivariateNormal):
        return None
    t, wts = np.polynomial.hermite_e.hermegauss(nodes)
    wts = wts / wts.sum()
    mu = logistic(s.predictor.intercept + s.predictor.m_coef * (s.covariates.mean + s.covariates.sd * t))
    mean = float((wts * mu).sum())
    return mean, float((wts * (mu - mean) ** 2).sum())


# ---------------------------------------------------------------------------
# tables

@dataclass
class Table:
    title: str
    columns: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.columns)
        for r in self.rows:
            wr.writerow(["" if v is None else (f"{v:.6g}" if isinstance(v, float) else v) for v in r])
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [self.columns] + [["-" if v is None else (f"{v:.4g}" if isinstance(v, float) else str(v))
                                   for v in r] for r in self.rows]
        widths = [max(len(str(c[i])) for c in cells) for i in range(len(self.columns))]
        lines = [self.title]
        for k, row in enumerate(cells):
            lines.append("  ".join(str(c).rjust(wd) for c, wd in zip(row, widths)))
            if k == 0:
                lines.append("  ".join("-" * wd for wd in widths))
        return "\n".join(lines) + "\n"


_LAYOUTS = ("power", "typei", "gcomp", "biasfactor")


def summarize(results, layout: str) -> Table:
    """Tabulate results: ``power``, ``typei``, ``gcomp`` or ``biasfactor``.

    Rates are shown in percent.  Wald ratios are 1%-trimmed means (each tail).
    """
    layout = layout.lower().replace("-", "").replace("_", "")
    if layout not in _LAYOUTS:
        raise OutOfRange(f"layout must be one of {_LAYOUTS}")
    results = list(results)
    if not results:
        raise OutOfRange("nothing to summarize")

    if layout == "power":
        cols = ["scenario", "E(mu)", "Var(mu)", "f_eff"]
        for t in TESTS:
            cols += [f"{t} wald_ratio", f"{t} UN", f"{t} P-LR"]
        rows = []
        for r in results:
            row = [r.name, r.efficiency["e_mu"]["mean"], r.efficiency["var_mu"]["mean"],
                   r.efficiency["f_eff"]["mean"]]
            for t in TESTS:
                row += [r.wald_ratio[t]["trimmed_mean"], 100 * r.rejection["UN"][t]["rate"],
                        100 * r.rejection["P-LR"][t]["rate"]]
            rows.append(row)
        return Table("Efficiency factor and power (%)", cols, rows)

    if layout == "typei":
        cols = ["scenario"] + [f"{t} {m}" for t in TESTS for m in MODELS]
        rows = [[r.name] + [100 * r.rejection[m][t]["rate"] for t in TESTS for m in MODELS]
                for r in results]
        return Table("Type I error rate (%)", cols, rows)

    if layout == "gcomp":
        cols = ["scenario", "estimand", "value", "deviation UN", "deviation P-LR",
                "sd UN", "sd P-LR", "width UN", "width P-LR", "width ratio", "f_eff"]
        rows = []
        for r in results:
            for e in ("OR", "RR", "RD"):
                b = r.estimands[e]
                wr = b["width_ratio"]["mean"] if b["width_ratio"] else None
                rows.append([r.name, e, b["value"]["mean"],
                             b["UN"]["mean_deviation"], b["P-LR"]["mean_deviation"],
                             b["UN"]["sd_of_estimator"], b["P-LR"]["sd_of_estimator"],
                             _none_nan(b["UN"]["mean_ci_width"]), _none_nan(b["P-LR"]["mean_ci_width"]),
                             wr, r.efficiency["f_eff"]["mean"]])
        return Table("G-computation estimators and bootstrap intervals", cols, rows)

    cols = ["scenario", "coef_ratio", "var_ratio", "E(mu)", "Var(mu)", "f_eff"]
    rows = [[r.name, r.bias_factor["coefficient_ratio"]["trimmed_mean"],
             r.bias_factor["variance_ratio"]["mean"], r.efficiency["e_mu"]["mean"],
             r.efficiency["var_mu"]["mean"], r.efficiency["f_eff"]["mean"]] for r in results]
    return Table("Bias factor and asymptotic relative efficiency", cols, rows)


def _none_nan(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def default_threads() -> int:
    """Worker count from the environment, else 1."""
    env = os.environ.get(ENV_THREADS)
    return max(1, int(env)) if env else 1
