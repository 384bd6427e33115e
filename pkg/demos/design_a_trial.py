"""Planning a trial around a prognostic score.

Historical control data tell us what the control-arm event probabilities look
like.  From their mean and spread we get the efficiency factor, and from that
the sample size the adjusted analysis needs to match an unadjusted design, or
the power it buys at a fixed size.

Run:  python demos/design_a_trial.py
"""
import numpy as np

from prognostic_logit import (ControlRiskProfile, design_report, efficiency_factor, power_curve,
                              profile_from_model)

# A prognostic model scores each historical control on the logit scale.
# Here: intercept 1, slope 1, scores roughly Normal(0, 1.5^2).
scores = 1.5 * np.random.default_rng(1).standard_normal(4000)
profile = profile_from_model(1.0, 1.0, scores)
print(f"control risk: mean {profile.mean_mu:.3f}, variance {profile.var_mu:.4f}")
print(f"efficiency factor {efficiency_factor(profile):.3f}")

# An unadjusted design with 500 participants and 78% power.
rep = design_report(profile, n_un=500, power_un=0.78)
print(f"same power with {rep.n_procova} participants, or power {rep.power_procova:.3f} at 500")

# If the score only approximates the true risk, shrink the gain by the correlation.
noisy = design_report(profile, n_un=500, power_un=0.78, corr=0.83)
print(f"with corr 0.83: factor {noisy.f_eff_adjusted:.3f}, n {noisy.n_procova}")

# Moments can also come straight from a published summary.
print(f"f(0.5, 0.07) = {efficiency_factor(ControlRiskProfile(0.5, 0.07)):.3f}")

# Power against the unadjusted Wald statistic for several factors.
curve = power_curve(w_range=(1.0, 3.5, 0.5))
print("\n   w  " + "  ".join(f"f={f:.2f}" for f in curve.f))
for j, w in enumerate(curve.w):
    print(f"{w:4.1f}  " + "  ".join(f"{p:6.3f}" for p in curve.power[:, j]))
