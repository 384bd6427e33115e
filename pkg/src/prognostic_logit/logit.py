"""Maximum-likelihood logistic regression for two-arm trials.

Two models are supported: the unadjusted model with design row ``(1, w)`` and
the prognostic-score adjusted model with design row ``(1, w, m)``.  Fitting is
Newton-Raphson (IRLS) with step-halving.

The numerical core, :func:`fit_batch`, fits many independent problems at once
over a leading batch axis.  Every reduction runs along the participant axis of
a single problem, so a problem's result does not depend on which other
problems share its batch.  :func:`fit_mle` is the one-dataset front end and
goes through the same code path.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .data import TrialDataset
from .errors import (ConstantPredictor, NonPositiveVariance, NotConverged,
                     OutOfRange, SeparationDetected)
from .normal import logistic, normal_cdf, normal_quantile

__all__ = [
    "ModelSpec", "FittedModel", "WaldResult", "BatchFit",
    "design_matrix", "fit_batch", "fit_mle", "predict_probs", "wald_test",
]

SCORE_TOL = 1e-8
DEVIANCE_TOL = 1e-10
MAX_HALVINGS = 20
SEPARATION_COEF = 30.0
SEPARATION_PROB = 1e-10


class ModelSpec(enum.Enum):
    """Which logistic model to fit.  Coefficients are ordered as the design row."""

    UNADJUSTED = "unadjusted"
    ADJUSTED = "prog_score_adjusted"

    @property
    def n_coef(self) -> int:
        return 2 if self is ModelSpec.UNADJUSTED else 3

    @property
    def coef_names(self) -> tuple[str, ...]:
        return ("intercept", "treatment", "prognostic_score")[: self.n_coef]


def design_matrix(spec: ModelSpec, treatment, score):
    """Transposed design ``(..., K, n)``; leading axes of the inputs are kept."""
    w = np.asarray(treatment, dtype=float)
    cols = [np.ones_like(w), w]
    if spec is ModelSpec.ADJUSTED:
        cols.append(np.broadcast_to(np.asarray(score, dtype=float), w.shape))
    return np.stack(cols, axis=-2)


# ---------------------------------------------------------------------------
# batched IRLS

class Status(enum.IntEnum):
    OK = 0
    SEPARATION = 1
    NOT_CONVERGED = 2
    SINGULAR = 3


@dataclass
class BatchFit:
    coef: np.ndarray          # (R, K)
    cov: np.ndarray           # (R, K, K)
    loglik: np.ndarray        # (R,)
    iterations: np.ndarray    # (R,)
    status: np.ndarray        # (R,) Status codes
    loglik_path: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == Status.OK


def _cholesky(H):
    """Batched Cholesky of small SPD matrices.  Returns (L, ok)."""
    R, K, _ = H.shape
    L = np.zeros_like(H)
    ok = np.ones(R, dtype=bool)
    for j in range(K):
        d = H[:, j, j] - (L[:, j, :j] ** 2).sum(-1)
        ok &= d > 0
        L[:, j, j] = np.sqrt(np.where(d > 0, d, 1.0))
        for i in range(j + 1, K):
            L[:, i, j] = (H[:, i, j] - (L[:, i, :j] * L[:, j, :j]).sum(-1)) / L[:, j, j]
    return L, ok


def _cho_solve(L, b):
    R, K, _ = L.shape
    z = np.empty_like(b)
    for i in range(K):
        z[:, i] = (b[:, i] - (L[:, i, :i] * z[:, :i]).sum(-1)) / L[:, i, i]
    x = np.empty_like(b)
    for i in reversed(range(K)):
        x[:, i] = (z[:, i] - (L[:, i + 1:, i] * x[:, i + 1:]).sum(-1)) / L[:, i, i]
    return x


def _cho_inverse(L):
    R, K, _ = L.shape
    eye = np.eye(K)
    cols = [_cho_solve(L, np.broadcast_to(eye[:, k], (R, K)).copy()) for k in range(K)]
    inv = np.stack(cols, axis=-1)
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def _evaluate(XT, y, wt, beta):
    """Linear predictor, log-likelihood, score and information for each problem.

    ``XT`` is either (R, K, n), one design per problem, or (K, n) shared by all.
    """
    shared = XT.ndim == 2
    eta = beta @ XT if shared else (XT * beta[:, :, None]).sum(1)
    mu = logistic(eta)
    # log(1 + exp(eta)) without overflow
    softplus = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    ll = (wt * (y * eta - softplus)).sum(-1)
    resid = wt * (y - mu)
    v = wt * mu * (1.0 - mu)
    K = XT.shape[-2]
    info = np.empty((eta.shape[0], K, K))
    if shared:
        score = resid @ XT.T
        pairs = [(j, k) for j in range(K) for k in range(j, K)]
        prod = np.stack([XT[j] * XT[k] for j, k in pairs], axis=1)
        flat = v @ prod
        for c, (j, k) in enumerate(pairs):
            info[:, j, k] = info[:, k, j] = flat[:, c]
    else:
        score = (XT * resid[:, None, :]).sum(-1)
        for j in range(K):
            for k in range(j, K):
                info[:, j, k] = info[:, k, j] = (XT[:, j] * XT[:, k] * v).sum(-1)
    return mu, ll, score, info


def fit_batch(XT, y, weights=None, max_iter: int = 100, tol: float = SCORE_TOL,
              record_path: bool = False) -> BatchFit:
    """Fit ``R`` independent logistic regressions by IRLS.

    Parameters
    ----------
    XT : array (R, K, n) or (K, n)
        Transposed design matrices; a 2-D design is shared by all problems.
    y : array (R, n) or (n,)
        Binary outcomes.
    weights : array (R, n), optional
        Non-negative frequency weights (bootstrap counts).  Default 1.
    max_iter : int
        Newton iterations allowed per problem.
    tol : float
        Convergence threshold on the largest absolute score component.  The
        relative deviance change must also fall below 1e-10.

    Returns
    -------
    BatchFit
        Problems that fail carry a non-OK status and NaN estimates.
    """
    XT = np.asarray(XT, dtype=float)
    y = np.asarray(y, dtype=float)
    R = max(XT.shape[0] if XT.ndim == 3 else 1,
            y.shape[0] if y.ndim == 2 else 1,
            0 if weights is None else np.shape(weights)[0])
    K, n = XT.shape[-2:]
    shared = XT.ndim == 2
    if not shared:
        XT = np.broadcast_to(XT, (R, K, n))
    y = np.broadcast_to(y, (R, n))
    wt = np.ones((R, n)) if weights is None else np.broadcast_to(np.asarray(weights, float), (R, n))

    beta = np.zeros((R, K))
    status = np.full(R, Status.NOT_CONVERGED, dtype=np.int8)
    iterations = np.zeros(R, dtype=np.int64)
    loglik = np.full(R, np.nan)
    cov = np.full((R, K, K), np.nan)
    path = []

    active = np.arange(R)
    mu, ll, score, info = _evaluate(XT, y, wt, beta)
    if record_path:
        path.append(ll.copy())

    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        xa = XT if shared else XT[active]
        ya, wa = y[active], wt[active]
        b0 = beta[active]
        L, pd = _cholesky(info)
        step = _cho_solve(L, score)

        t = np.ones(active.size)
        b1 = b0 + step
        mu1, ll1, score1, info1 = _evaluate(xa, ya, wa, b1)
        for _ in range(MAX_HALVINGS):
            worse = ~(ll1 >= ll - 1e-12 * np.abs(ll)) & pd
            if not worse.any():
                break
            t[worse] *= 0.5
            idx = np.flatnonzero(worse)
            b1[idx] = b0[idx] + t[idx, None] * step[idx]
            m_, l_, s_, i_ = _evaluate(xa if shared else xa[idx], ya[idx], wa[idx], b1[idx])
            mu1[idx], ll1[idx], score1[idx], info1[idx] = m_, l_, s_, i_

        dev_change = np.abs(ll1 - ll) / (np.abs(ll1) + 0.1)
        beta[active] = b1
        iterations[active] = it
        if record_path:
            full = path[-1].copy()
            full[active] = ll1
            path.append(full)

        converged = pd & (np.abs(score1).max(-1) < tol) & (dev_change < DEVIANCE_TOL)
        extreme = (mu1 < SEPARATION_PROB) | (mu1 > 1.0 - SEPARATION_PROB)
        separated = pd & ~converged & ((np.abs(b1).max(-1) > SEPARATION_COEF) | extreme.any(-1))
        singular = ~pd

        done = converged | separated | singular
        status[active[separated]] = Status.SEPARATION
        status[active[singular]] = Status.SINGULAR
        if converged.any():
            idx = active[converged]
            Lc, pdc = _cholesky(info1[converged])
            status[idx] = np.where(pdc, Status.OK, Status.SINGULAR)
            cov[idx] = _cho_inverse(Lc)
            loglik[idx] = ll1[converged]

        keep = ~done
        active = active[keep]
        mu, ll, score, info = mu1[keep], ll1[keep], score1[keep], info1[keep]

    bad = status != Status.OK
    beta[bad] = np.nan
    cov[bad] = np.nan
    return BatchFit(beta, cov, loglik, iterations, status, path)


# ---------------------------------------------------------------------------
# single-dataset API

@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: ModelSpec
    coef: np.ndarray
    cov: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    n: int
    loglik_path: tuple = ()

    @property
    def std_errors(self):
        return np.sqrt(np.diag(self.cov))

    def to_dict(self) -> dict:
        return {
            "model": self.spec.value,
            "coef_names": list(self.spec.coef_names),
            "coef": [float(c) for c in self.coef],
            "std_error": [float(s) for s in self.std_errors],
            "cov": [[float(c) for c in row] for row in self.cov],
            "loglik": float(self.loglik),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "n": int(self.n),
        }


def fit_mle(d: TrialDataset, spec: ModelSpec, max_iter: int = 100,
            tol: float = SCORE_TOL) -> FittedModel:
    """Fit ``spec`` to ``d`` by maximum likelihood.

    Raises
    ------
    ConstantPredictor
        Adjusted model requested but every score is identical.
    SeparationDetected
        Coefficients diverge (max-norm above 30) or fitted probabilities hit
        0 or 1 before the score converges.
    NotConverged
        ``max_iter`` iterations were not enough.
    """
    if spec is ModelSpec.ADJUSTED and np.ptp(d.prognostic_score) == 0.0:
        raise ConstantPredictor("prognostic score is constant; its coefficient is not identified")
    XT = design_matrix(spec, d.treatment, d.prognostic_score)
    fit = fit_batch(XT[None], d.outcome[None], max_iter=max_iter, tol=tol, record_path=True)
    st = fit.status[0]
    if st == Status.SEPARATION:
        raise SeparationDetected("complete or quasi-complete separation detected")
    if st == Status.SINGULAR:
        raise SeparationDetected("information matrix became singular during fitting")
    if st == Status.NOT_CONVERGED:
        raise NotConverged(max_iter)
    coef = fit.coef[0]
    cov = fit.cov[0]
    coef.flags.writeable = False
    cov.flags.writeable = False
    path = tuple(float(p[0]) for p in fit.loglik_path)
    return FittedModel(spec, coef, cov, float(fit.loglik[0]), int(fit.iterations[0]),
                       True, d.n, path)


def predict_probs(m: FittedModel, d: TrialDataset, forced_treatment: int | None = None):
    """Fitted event probabilities, optionally with everyone set to one arm."""
    if forced_treatment is None:
        w = d.treatment
    elif forced_treatment in (0, 1):
        w = np.full(d.n, forced_treatment)
    else:
        raise OutOfRange("forced_treatment must be 0, 1 or None")
    XT = design_matrix(m.spec, w, d.prognostic_score)
    return logistic(m.coef @ XT)


@dataclass(frozen=True)
class WaldResult:
    estimate: float
    std_error: float
    statistic: float
    p_value: float
    ci: tuple[float, float]
    null_value: float = 0.0
    alpha: float = 0.05

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error,
                "statistic": self.statistic, "p_value": self.p_value,
                "ci": list(self.ci), "null_value": self.null_value, "alpha": self.alpha}


def _wald(estimate, variance, null_value, alpha):
    if not 0.0 < alpha < 1.0:
        raise OutOfRange("alpha must lie in (0, 1)")
    if not (np.isfinite(variance) and variance > 0.0):
        raise NonPositiveVariance(f"variance {variance!r} is not positive")
    se = float(np.sqrt(variance))
    z = (estimate - null_value) / se
    p = min(1.0, 2.0 * normal_cdf(-abs(z)))
    half = normal_quantile(1.0 - alpha / 2.0) * se
    return WaldResult(float(estimate), se, float(z), float(p),
                      (float(estimate - half), float(estimate + half)), null_value, alpha)


def wald_test(m: FittedModel, coef_index: int = 1, null_value: float = 0.0,
              alpha: float = 0.05) -> WaldResult:
    """Wald test and normal-theory interval for one coefficient."""
    if not 0 <= coef_index < len(m.coef):
        raise OutOfRange(f"coef_index must be in [0, {len(m.coef)})")
    return _wald(m.coef[coef_index], m.cov[coef_index, coef_index], null_value, alpha)
