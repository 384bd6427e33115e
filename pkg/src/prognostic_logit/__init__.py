"""Prognostic-score adjusted logistic regression for randomized trials with a binary endpoint.

Modules
-------
data        trial extracts and validation
logit       maximum likelihood fitting and Wald inference
design      efficiency factor, power and sample-size projections
gcomp       marginal estimands by g-computation, Delta method and bootstrap
simulation  Monte Carlo operating characteristics
cli         command-line front end
"""
from importlib import resources as _resources

from .data import ArmSummary, TrialDataset, arm_summary, load_dataset
from .design import (ControlRiskProfile, DesignReport, PowerCurve, Rounding,
                     adjusted_efficiency_factor, bias_factor, design_report,
                     efficiency_factor, power_curve, power_from_wald, procova_power,
                     profile_from_model, profile_from_mu, sample_size_procova,
                     wald_from_power)
from .errors import *  # noqa: F401,F403
from .gcomp import (AnalysisReport, BootstrapCI, Estimand, MarginalEstimates, MarginalWald,
                    analyze, bootstrap_ci, bootstrap_cis, marginal_wald, plug_in_estimates)
from .logit import FittedModel, ModelSpec, WaldResult, fit_mle, predict_probs, wald_test
from .normal import logistic, normal_cdf, normal_quantile
from .simulation import (ScenarioResult, ScenarioSpec, builtin_scenarios, generate_trial,
                         get_scenario, run_scenario, summarize)

__version__ = "0.1.0"


def schema_path(name: str):
    """Path to a shipped JSON schema: ``design_report``, ``analysis_report`` or ``scenario_result``."""
    return _resources.files(__name__).joinpath("schemas", f"{name}.schema.json")
