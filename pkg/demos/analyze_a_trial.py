"""Analysing one completed trial with and without the prognostic score.

We simulate a 500-participant trial, write it to CSV as a sponsor would
receive it, then fit both logistic models.  The adjusted model targets the
conditional odds ratio; g-computation turns either fit into marginal risk
difference, relative risk and odds ratio.

Run:  python demos/analyze_a_trial.py
"""
import csv
import tempfile
from pathlib import Path

from prognostic_logit import analyze, generate_trial, get_scenario, load_dataset

trial, truth = generate_trial(get_scenario("baseline"), replication_index=3)

path = Path(tempfile.mkdtemp()) / "trial.csv"
with path.open("w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["subject_id", "treatment", "outcome", "prognostic_score"])
    for row in zip(trial.subject_id, trial.treatment, trial.outcome, trial.prognostic_score):
        w.writerow([row[0], int(row[1]), int(row[2]), float(row[3])])

data = load_dataset(path)
report = analyze(data, bootstrap=1000, seed=2024).to_dict()

for name, model in report["models"].items():
    tw = model["treatment_wald"]
    print(f"{name}: log OR {tw['estimate']:.3f} (SE {tw['std_error']:.3f}), p = {tw['p_value']:.2g}")
    for est, ci in model["bootstrap"].items():
        print(f"   {est}: {model['marginal_estimates'][est]:.3f}  bootstrap CI [{ci['lower']:.3f}, {ci['upper']:.3f}]")

dg = report["diagnostics"]
print(f"\nrealized efficiency factor {dg['efficiency_factor']:.3f}, Wald ratio {dg['wald_ratio']:.3f}")
print(f"truth for this trial: RD {truth.rd:.3f}, RR {truth.rr:.3f}, OR {truth.or_:.3f}")
