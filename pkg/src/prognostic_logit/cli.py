"""Command-line front end.

Subcommands: ``design``, ``analyze``, ``simulate``, ``power-curve`` and
``scenarios``.  Files go to ``--output-dir`` (default: the value of
``PROGNOSTIC_LOGIT_OUTPUT_DIR``, else the working directory); a short
human-readable summary goes to stdout.

Exit codes: 0 success, 2 invalid input, 3 fitting failure (separation or
non-convergence), 4 too many failed simulated trials.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import secrets
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .data import load_dataset
from .design import (FIGURE_F_VALUES, ControlRiskProfile, Rounding, design_report,
                     power_curve, profile_from_model, profile_from_mu)
from .errors import (ConflictingInputs, ExcessiveFailureRate, FitError, OutOfRange,
                     PrognosticLogitError, ValidationError)
from .gcomp import analyze
from .simulation import (ENV_THREADS, builtin_scenarios, default_threads, get_scenario, json_safe,
                         load_scenario, run_scenario, summarize)

EXIT_OK, EXIT_VALIDATION, EXIT_FIT, EXIT_SIM = 0, 2, 3, 4
ENV_OUTPUT_DIR = "PROGNOSTIC_LOGIT_OUTPUT_DIR"

PAPER_SCALE_REPLICATIONS = 100_000
PAPER_SCALE_BOOTSTRAP = 5000


def _alpha(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _bootstrap(text):
    v = int(text)
    if v != 0 and v < 100:
        raise argparse.ArgumentTypeError("bootstrap B must be 0 or at least 100")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _w_range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected lo:hi:step")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with status 2 on bad flags, which is also EXIT_VALIDATION
    p = argparse.ArgumentParser(prog="prognostic-logit",
                description="Design and analysis of binary-endpoint trials adjusted by a prognostic score.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=None,
                        help=f"where files are written (env {ENV_OUTPUT_DIR}; default: current directory)")
    common.add_argument("--alpha", type=_alpha, default=0.05, help="two-sided test level (default 0.05)")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", parents=[common], help="efficiency factor, sample size and projected power")
    src = d.add_argument_group("control-arm risk profile (choose one)")
    src.add_argument("--mean-mu", type=float, help="E(mu), mean control-arm risk")
    src.add_argument("--var-mu", type=float, help="Var(mu), variance of control-arm risk")
    src.add_argument("--mu-file", type=Path, help="CSV or text file of per-participant control-arm risks")
    src.add_argument("--mu-column", default=None, help="column of --mu-file to read (default: first)")
    src.add_argument("--beta0", type=float, help="control-arm intercept (with --beta2 and --score-file)")
    src.add_argument("--beta2", type=float, help="prognostic score coefficient")
    src.add_argument("--score-file", type=Path, help="CSV or text file of prognostic scores")
    src.add_argument("--score-column", default=None)
    tgt = d.add_argument_group("unadjusted reference (any of)")
    tgt.add_argument("--n-un", type=int, help="total sample size of the unadjusted design")
    tgt.add_argument("--power-un", type=float, help="power of the unadjusted design")
    tgt.add_argument("--w-un", type=float, help="expected unadjusted Wald statistic")
    d.add_argument("--corr", type=float, help="correlation between the score-based and true risk (noise adjustment)")
    d.add_argument("--exact", action="store_true", help="report f**2 * N without rounding up to an even integer")

    a = sub.add_parser("analyze", parents=[common], help="fit both models to a trial extract")
    a.add_argument("dataset", type=Path, help="CSV with subject_id, treatment, outcome, prognostic_score")
    a.add_argument("--bootstrap", type=_bootstrap, default=5000, help="bootstrap resamples; 0 skips (default 5000)")
    a.add_argument("--seed", type=_seed, default=None, help="random seed (default: fresh entropy, recorded)")
    a.add_argument("--score-transform", choices=("identity", "logit"), default="identity")
    for field in ("subject-id", "treatment", "outcome", "prognostic-score"):
        a.add_argument(f"--{field}-column", default=None, metavar="NAME")
    a.add_argument("--max-iter", type=_positive_int, default=100)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo operating characteristics")
    which = s.add_mutually_exclusive_group(required=True)
    which.add_argument("--scenario", help="builtin scenario name (see `scenarios`)")
    which.add_argument("--config", type=Path, help="scenario file (.json or .toml)")
    s.add_argument("--null", action="store_true", help="force the treatment coefficient to zero")
    s.add_argument("--replications", type=_positive_int, default=None)
    s.add_argument("--seed", type=_seed, default=None)
    s.add_argument("--bootstrap-replications", type=int, default=None,
                   help="leading replications that get bootstrap CIs (default 500)")
    s.add_argument("--bootstrap", type=_bootstrap, default=None, help="resamples per bootstrap (default 1000)")
    s.add_argument("--paper-scale", action="store_true",
                   help=f"{PAPER_SCALE_REPLICATIONS} replications, all bootstrapped with B={PAPER_SCALE_BOOTSTRAP}")
    s.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker processes (env {ENV_THREADS}; results do not depend on it)")

    c = sub.add_parser("power-curve", parents=[common], help="adjusted power against the unadjusted Wald statistic")
    c.add_argument("--f", type=_float_list, default=list(FIGURE_F_VALUES), help="comma-separated efficiency factors")
    c.add_argument("--w-range", type=_w_range, default=(0.0, 4.0, 0.05), help="lo:hi:step (default 0:4:0.05)")
    c.add_argument("--svg", action="store_true", help="also write an SVG chart")

    sub.add_parser("scenarios", help="list builtin simulation scenarios")
    return p


# ---------------------------------------------------------------------------

def _output_dir(args) -> Path:
    out = args.output_dir or Path(os.environ.get(ENV_OUTPUT_DIR) or ".")
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OutOfRange(f"output directory {out} is not writable")
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _read_column(path: Path, column: str | None):
    """Numbers from a one-column text file or a named (default: first) CSV column."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise OutOfRange(f"{path} contains no values")
    idx = 0
    try:
        float(rows[0][0])
    except ValueError:
        header = [h.strip() for h in rows.pop(0)]
        if column is not None:
            if column not in header:
                raise OutOfRange(f"column {column!r} not found in {path}")
            idx = header.index(column)
    try:
        return [float(r[idx]) for r in rows]
    except (ValueError, IndexError):
        raise OutOfRange(f"{path} has a missing or non-numeric value") from None


def _seed_or_entropy(seed):
    if seed is not None:
        return seed, "user"
    return secrets.randbits(63), "entropy"


def _fmt(v, nd=4):
    return "-" if v is None else (f"{v:.{nd}f}" if isinstance(v, float) else str(v))


def cmd_design(args) -> int:
    moments = args.mean_mu is not None or args.var_mu is not None
    model = any(v is not None for v in (args.beta0, args.beta2, args.score_file))
    chosen = sum([moments, args.mu_file is not None, model])
    if chosen != 1:
        raise ConflictingInputs("give exactly one of (--mean-mu, --var-mu), --mu-file, or "
                                "(--beta0, --beta2, --score-file)")
    if moments:
        if args.mean_mu is None or args.var_mu is None:
            raise ConflictingInputs("--mean-mu and --var-mu go together")
        profile = ControlRiskProfile(args.mean_mu, args.var_mu)
    elif args.mu_file is not None:
        profile = profile_from_mu(_read_column(args.mu_file, args.mu_column))
    else:
        if None in (args.beta0, args.beta2, args.score_file):
            raise ConflictingInputs("--beta0, --beta2 and --score-file go together")
        profile = profile_from_model(args.beta0, args.beta2, _read_column(args.score_file, args.score_column))
    rep = design_report(profile, n_un=args.n_un, power_un=args.power_un, w_un=args.w_un,
                        corr=args.corr, alpha=args.alpha,
                        rounding=Rounding.EXACT if args.exact else Rounding.CEIL_EVEN)
    out = _output_dir(args)
    _write(out / "design_report.json",
           json.dumps({"schema_version": "1.0", **rep.to_dict()}, indent=2, allow_nan=False) + "\n")
    lines = [f"E(mu) = {profile.mean_mu:.4f}   Var(mu) = {profile.var_mu:.4f}",
             f"efficiency factor f = {rep.f_eff:.4f}   (f^2 = {rep.are:.4f})"]
    if rep.f_eff_adjusted is not None:
        lines.append(f"noise-adjusted factor = {rep.f_eff_adjusted:.4f}   (corr = {rep.corr:g})")
    if rep.n_procova is not None:
        lines.append(f"sample size: unadjusted {rep.n_unadjusted} -> adjusted {_fmt(rep.n_procova, 2)}")
    if rep.power_procova is not None:
        lines.append(f"power: unadjusted {rep.power_unadjusted:.4f} -> adjusted {rep.power_procova:.4f}"
                     f"   (W_UN = {rep.w_unadjusted:.4f})")
    lines.append(f"wrote {out / 'design_report.json'}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_analyze(args) -> int:
    schema = {k: getattr(args, f"{k}_column") for k in ("subject_id", "treatment", "outcome", "prognostic_score")}
    schema = {k: v for k, v in schema.items() if v is not None}
    d = load_dataset(args.dataset, schema or None, args.score_transform)
    seed, source = _seed_or_entropy(args.seed) if args.bootstrap else (args.seed, "user")
    rep = analyze(d, alpha=args.alpha, bootstrap=args.bootstrap, seed=seed, max_iter=args.max_iter)
    payload = rep.to_dict()
    payload["seed_source"] = source if args.bootstrap else None
    out = _output_dir(args)
    _write(out / "analysis_report.json", json.dumps(payload, indent=2, allow_nan=False) + "\n")
    if args.bootstrap:
        _write(out / "bootstrap_draws.csv", rep.bootstrap_csv())
    summary = _analysis_text(rep, seed, source)
    _write(out / "analysis_summary.txt", summary)
    print(summary, end="")
    return EXIT_OK


def _analysis_text(rep, seed, source) -> str:
    lines = [f"n = {rep.n}   alpha = {rep.alpha}   bootstrap B = {rep.bootstrap_resamples}"
             + (f"   seed = {seed} ({source})" if rep.bootstrap_resamples else "")]
    for name, arm in rep.arms.items():
        lines.append(f"  {name:8s} {arm['events']}/{arm['count']} events ({arm['event_rate']:.3f})")
    for model, block in rep.models.items():
        w = block["treatment_wald"]
        lines.append(f"[{model}] treatment log-OR {w['estimate']:.4f} (SE {w['std_error']:.4f}), "
                     f"z = {w['statistic']:.3f}, p = {w['p_value']:.4g}")
        for est, mw in block["marginal_wald"].items():
            lo, hi = mw["natural_ci"]
            lines.append(f"    {est.replace('log', ''):6s} {mw['natural_estimate']:.4f}  delta CI [{lo:.4f}, {hi:.4f}]  "
                         f"p = {mw['p_value']:.4g}")
        for est, ci in block.get("bootstrap", {}).items():
            lines.append(f"    {est:6s} bootstrap CI [{ci['lower']:.4f}, {ci['upper']:.4f}]")
    dg = rep.diagnostics
    lines.append(f"realized f = {dg['efficiency_factor']:.4f}   Wald ratio UN/P-LR = {_fmt(dg['wald_ratio'])}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    if args.config is not None:
        spec = load_scenario(args.config)
    else:
        spec = get_scenario(args.scenario)
    over = {}
    if args.paper_scale:
        over.update(replications=PAPER_SCALE_REPLICATIONS, bootstrap_replications=PAPER_SCALE_REPLICATIONS,
                    bootstrap_resamples=PAPER_SCALE_BOOTSTRAP)
    if args.null:
        over["null_mode"] = True
    if args.replications is not None:
        over["replications"] = args.replications
    if args.bootstrap_replications is not None:
        over["bootstrap_replications"] = args.bootstrap_replications
    if args.bootstrap is not None:
        over["bootstrap_resamples"] = args.bootstrap
    seed, source = _seed_or_entropy(args.seed)
    over["seed"] = seed
    over["alpha"] = args.alpha
    spec = replace(spec, **over)
    res = run_scenario(spec, threads=args.threads or default_threads())
    out = _output_dir(args)
    payload = res.to_dict()
    payload["seed_source"] = source
    stem = f"{spec.slug}{'-null' if spec.null_mode else ''}"
    _write(out / f"{stem}.json", json.dumps(json_safe(payload), indent=2, allow_nan=False) + "\n")
    text = []
    for layout in ("typei",) if spec.null_mode else ("power", "gcomp", "biasfactor"):
        t = summarize([res], layout)
        _write(out / f"{stem}-{layout}.csv", t.to_csv())
        text.append(t.to_text())
    text.append(f"seed = {seed} ({source}); {res.failures} of {res.replications} replications failed")
    print("\n".join(text))
    return EXIT_OK


def cmd_power_curve(args) -> int:
    curve = power_curve(args.f, args.w_range, args.alpha)
    out = _output_dir(args)
    _write(out / "power_curve.csv", curve.to_csv())
    msg = [f"wrote {out / 'power_curve.csv'} ({len(curve.f)} curves x {len(curve.w)} points)"]
    if args.svg:
        _write(out / "power_curve.svg", curve.to_svg())
        msg.append(f"wrote {out / 'power_curve.svg'}")
    print("\n".join(msg))
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for s in builtin_scenarios():
        cov = s.covariates
        print(f"{s.slug:24s} {s.name:24s} N={s.n:<4d} {type(cov).__name__}")
    return EXIT_OK


_COMMANDS = {"design": cmd_design, "analyze": cmd_analyze, "simulate": cmd_simulate,
             "power-curve": cmd_power_curve, "scenarios": cmd_scenarios}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FitError as e:
        print(f"fit error: {e}", file=sys.stderr)
        return EXIT_FIT
    except ExcessiveFailureRate as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_SIM
    except PrognosticLogitError as e:  # pragma: no cover - all concrete errors are classified above
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
