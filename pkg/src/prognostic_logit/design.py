"""Prospective design calculations for prognostic-score adjustment.

The central quantity is the efficiency factor

    f = sqrt(1 - Var(mu0) / (E(mu0) * (1 - E(mu0))))

where ``mu0`` are the participants' control-arm event probabilities implied by
their prognostic scores.  ``f`` approximates the ratio of the unadjusted to
the adjusted Wald statistic for the treatment coefficient, so ``f**2`` is the
sample-size multiplier and ``W / f`` is the adjusted Wald statistic.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConflictingInputs, OutOfRange
from .normal import logistic, normal_cdf, normal_quantile

__all__ = [
    "ControlRiskProfile", "DesignReport", "Rounding", "PowerCurve",
    "profile_from_mu", "profile_from_model", "efficiency_factor",
    "adjusted_efficiency_factor", "bias_factor", "power_from_wald",
    "wald_from_power", "procova_power", "sample_size_procova", "power_curve",
    "design_report", "FIGURE_F_VALUES",
]

FIGURE_F_VALUES = (1.0, 0.95, 0.9, 0.85, 0.8)


@dataclass(frozen=True, eq=False)
class ControlRiskProfile:
    """Moments of the control-arm event probabilities.

    ``var_mu`` uses the population denominator.  ``mu`` is kept when the
    profile was built from individual probabilities.
    """

    mean_mu: float
    var_mu: float
    mu: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.mean_mu < 1.0:
            raise OutOfRange(f"mean_mu must lie in (0, 1), got {self.mean_mu}")
        if not 0.0 <= self.var_mu < self.mean_mu * (1.0 - self.mean_mu):
            raise OutOfRange(
                f"var_mu must lie in [0, mean_mu*(1-mean_mu)) = [0, {self.mean_mu * (1 - self.mean_mu):.6g}), "
                f"got {self.var_mu}")


def profile_from_mu(mu) -> ControlRiskProfile:
    mu = np.array(mu, dtype=float)
    if mu.ndim != 1 or mu.size < 2:
        raise OutOfRange("need a vector of at least two probabilities")
    if not np.all((mu > 0.0) & (mu < 1.0)):
        raise OutOfRange("every probability must lie strictly inside (0, 1)")
    mean = float(mu.mean())
    var = float(((mu - mean) ** 2).mean())
    mu.flags.writeable = False
    return ControlRiskProfile(mean, var, mu)


def profile_from_model(beta0: float, beta2: float, scores) -> ControlRiskProfile:
    """Profile implied by control-arm coefficients applied to prognostic scores."""
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise OutOfRange("scores must be finite")
    return profile_from_mu(logistic(beta0 + beta2 * scores))


def bias_factor(p: ControlRiskProfile) -> float:
    """Attenuation of the unadjusted treatment coefficient near the null.

    Also the asymptotic relative efficiency of the unadjusted estimator; the
    two coincide and both equal ``efficiency_factor(p) ** 2``.
    """
    return 1.0 - p.var_mu / (p.mean_mu * (1.0 - p.mean_mu))


def efficiency_factor(p: ControlRiskProfile) -> float:
    return math.sqrt(bias_factor(p))


def adjusted_efficiency_factor(p: ControlRiskProfile, corr: float) -> float:
    """Efficiency factor when the observed score is a noisy version of the true one.

    ``corr`` is the correlation between control probabilities computed from
    the observed and from the true scores; the explained part of the variance
    is ``corr**2 * var_mu``.
    """
    if not 0.0 <= corr <= 1.0:
        raise OutOfRange(f"corr must lie in [0, 1], got {corr}")
    return math.sqrt(1.0 - p.var_mu * corr ** 2 / (p.mean_mu * (1.0 - p.mean_mu)))


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise OutOfRange(f"alpha must lie in (0, 1), got {alpha}")


def power_from_wald(w: float, alpha: float = 0.05) -> float:
    """Two-sided power of a level-``alpha`` Wald test whose statistic centres on ``w``."""
    _check_alpha(alpha)
    z = normal_quantile(alpha / 2.0)
    return normal_cdf(z + w) + normal_cdf(z - w)


def wald_from_power(power: float, alpha: float = 0.05) -> float:
    """Non-negative ``w`` with ``power_from_wald(w, alpha) == power`` (bisection)."""
    _check_alpha(alpha)
    if power == alpha:
        return 0.0
    if not alpha < power < 1.0:
        raise OutOfRange(f"power must lie in (alpha, 1) = ({alpha}, 1), got {power}")
    lo, hi = 0.0, 1.0
    while power_from_wald(hi, alpha) < power:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-14 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if power_from_wald(mid, alpha) < power:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_f(f_eff):
    if not 0.0 < f_eff <= 1.0:
        raise OutOfRange(f"efficiency factor must lie in (0, 1], got {f_eff}")


def procova_power(w_un: float, f_eff: float, alpha: float = 0.05) -> float:
    """Projected power of the adjusted analysis given the unadjusted Wald statistic."""
    _check_f(f_eff)
    return power_from_wald(w_un / f_eff, alpha)


class Rounding(enum.Enum):
    CEIL_EVEN = "ceil_even"
    EXACT = "exact"


def sample_size_procova(n_un, f_eff: float, rounding: Rounding = Rounding.CEIL_EVEN):
    """Total sample size for the adjusted analysis to match the unadjusted power.

    ``CEIL_EVEN`` rounds ``f**2 * n_un`` up to the next even integer so a 1:1
    allocation stays possible.
    """
    _check_f(f_eff)
    if n_un < 2:
        raise OutOfRange("n_un must be at least 2")
    exact = f_eff ** 2 * n_un
    if Rounding(rounding) is Rounding.EXACT:
        return exact
    # guard against 361.0000000001 style representation error
    n = math.ceil(round(exact, 9))
    return n + (n % 2)


@dataclass(frozen=True, eq=False)
class PowerCurve:
    """Projected power on a grid of unadjusted Wald statistics, one curve per ``f``."""

    w: np.ndarray
    f: np.ndarray
    power: np.ndarray   # shape (len(f), len(w))
    alpha: float

    def rows(self):
        for i, f in enumerate(self.f):
            for j, w in enumerate(self.w):
                yield float(w), float(f), float(self.power[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("w,f,power\n")
        for w, f, p in self.rows():
            buf.write(f"{w:.10g},{f:.10g},{p:.12f}\n")
        return buf.getvalue()

    def to_svg(self, width: int = 640, height: int = 420) -> str:
        return _svg_chart(self, width, height)


def power_curve(f_list=FIGURE_F_VALUES, w_range=(0.0, 4.0, 0.05), alpha: float = 0.05) -> PowerCurve:
    """Evaluate :func:`procova_power` on a ``(lo, hi, step)`` grid, endpoints included."""
    lo, hi, step = (float(v) for v in w_range)
    if not (lo < hi and step > 0.0):
        raise OutOfRange("w_range needs lo < hi and step > 0")
    f_arr = np.asarray(f_list, dtype=float)
    for f in f_arr:
        _check_f(f)
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    w = lo + step * np.arange(count)
    z = normal_quantile(alpha / 2.0)
    shifted = w[None, :] / f_arr[:, None]
    power = normal_cdf(z + shifted) + normal_cdf(z - shifted)
    return PowerCurve(w, f_arr, power, alpha)


_COLOURS = ("#1b1b1b", "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b")


def _svg_chart(curve: PowerCurve, width, height):
    left, right, top, bottom = 60, 120, 20, 50
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = float(curve.w[0]), float(curve.w[-1])

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - y) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>']
    for k in range(6):
        yv = k / 5
        out.append(f'<line x1="{left - 4}" y1="{sy(yv):.1f}" x2="{left}" y2="{sy(yv):.1f}" stroke="#888"/>')
        out.append(f'<text x="{left - 8}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.1f}</text>')
    for k in range(6):
        xv = x0 + (x1 - x0) * k / 5
        out.append(f'<line x1="{sx(xv):.1f}" y1="{top + ph}" x2="{sx(xv):.1f}" y2="{top + ph + 4}" stroke="#888"/>')
        out.append(f'<text x="{sx(xv):.1f}" y="{top + ph + 18}" text-anchor="middle">{xv:.2f}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">'
               f'unadjusted Wald statistic</text>')
    out.append(f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2:.1f})">power (alpha = {curve.alpha:g})</text>')
    for i, f in enumerate(curve.f):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{sx(w):.2f},{sy(p):.2f}" for w, p in zip(curve.w, curve.power[i]))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 36}" y2="{ly}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 42}" y="{ly + 4}">f = {f:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class DesignReport:
    f_eff: float
    are: float
    alpha: float
    mean_mu: float
    var_mu: float
    f_eff_adjusted: float | None = None
    corr: float | None = None
    n_unadjusted: int | None = None
    n_procova: int | float | None = None
    w_unadjusted: float | None = None
    power_unadjusted: float | None = None
    power_procova: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def design_report(profile: ControlRiskProfile, *, n_un=None, power_un=None, w_un=None,
                  corr=None, alpha: float = 0.05,
                  rounding: Rounding = Rounding.CEIL_EVEN) -> DesignReport:
    """Efficiency factor plus, where inputs allow, sample size and projected power.

    When ``corr`` is given the noise-adjusted factor drives the sample-size
    and power projections.
    """
    _check_alpha(alpha)
    if power_un is not None and w_un is not None:
        raise ConflictingInputs("give either the unadjusted power or its Wald statistic, not both")
    f = efficiency_factor(profile)
    f_adj = None if corr is None else adjusted_efficiency_factor(profile, corr)
    f_use = f if f_adj is None else f_adj
    n_p = None if n_un is None else sample_size_procova(n_un, f_use, rounding)
    if power_un is not None:
        w_un = wald_from_power(power_un, alpha)
    p_un = p_p = None
    if w_un is not None:
        if w_un < 0:
            raise OutOfRange("w_un must be non-negative")
        p_un = power_from_wald(w_un, alpha)
        p_p = procova_power(w_un, f_use, alpha)
    return DesignReport(f_eff=f, are=bias_factor(profile), alpha=alpha,
                        mean_mu=profile.mean_mu, var_mu=profile.var_mu,
                        f_eff_adjusted=f_adj, corr=corr, n_unadjusted=n_un,
                        n_procova=n_p, w_unadjusted=w_un,
                        power_unadjusted=p_un, power_procova=p_p)
