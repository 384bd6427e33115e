"""How often do the two analyses reject, and how close is the efficiency factor?

Runs every builtin scenario at a modest replication count (no bootstrap) and
prints the power and bias-factor tables.  Use the CLI with --paper-scale for
the full 100,000-replication version.

Run:  python demos/operating_characteristics.py [replications]
"""
import sys
from dataclasses import replace

from prognostic_logit import builtin_scenarios, run_scenario, summarize

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
results = [run_scenario(replace(s, replications=reps, bootstrap_replications=0)) for s in builtin_scenarios()]

print(summarize(results, "power").to_text())
print(summarize(results, "biasfactor").to_text())

null = [run_scenario(replace(s, replications=reps, null_mode=True, bootstrap_replications=0))
        for s in builtin_scenarios()[:4]]
print(summarize(null, "typei").to_text())
