"""Command-line front end: simulate, analyze, plot, simstudy.

Results go to the output path (or stdout with ``--out -``); diagnostics and
errors go to stderr with a nonzero exit code.  Every subcommand is
deterministic given its flags and seed.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

from .methods import BAYESIAN_METHODS, METHOD_REGISTRY, analyze
from .plot import trial_svg
from .simstudy import load_grid, sim_study_par
from .simulate import simulate_trial
from .trial import TrialConfig, TrialData
from .validation import ValidationError


def _write_text(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with trial settings (flags override it)")
    p.add_argument("--endpoint", choices=("binary", "continuous"))
    p.add_argument("--num-arms", type=int, dest="num_arms")
    p.add_argument("--n-arm", type=int, dest="n_arm")
    p.add_argument("--d", type=int, nargs="+",
                   help="participants recruited before each arm enters, e.g. --d 0 250")
    p.add_argument("--p0", type=float, help="control response rate (binary)")
    p.add_argument("--mu0", type=float, help="control mean (continuous)")
    p.add_argument("--or", type=float, nargs="+", dest="OR",
                   help="odds ratio per arm (binary)")
    p.add_argument("--theta", type=float, nargs="+", help="mean difference per arm (continuous)")
    p.add_argument("--lambda", type=float, nargs="+", dest="lambda_",
                   help="trend strength per arm, control first")
    p.add_argument("--sigma", type=float, help="response standard deviation (continuous)")
    p.add_argument("--trend", choices=("linear", "stepwise", "inv_u", "seasonal"))
    p.add_argument("--n-peak", type=int, dest="N_peak", help="trend peak position (inv_u)")
    p.add_argument("--n-wave", type=int, dest="n_wave", help="number of waves (seasonal)")
    p.add_argument("--period-blocks", type=int, dest="period_blocks",
                   help="blocks per arm per period unit (default 2)")


def _config_from_args(args) -> TrialConfig:
    spec = {}
    if args.config:
        spec.update(json.loads(open(args.config).read()))
    for key in ("endpoint", "num_arms", "n_arm", "d", "p0", "mu0", "OR", "theta",
                "sigma", "trend", "N_peak", "n_wave", "period_blocks"):
        value = getattr(args, key, None)
        if value is not None:
            spec[key] = value
    if args.lambda_ is not None:
        spec["lambda"] = args.lambda_
    if args.p0 is not None and spec.get("endpoint") is None:
        spec["endpoint"] = "binary"
    if args.mu0 is not None and spec.get("endpoint") is None:
        spec["endpoint"] = "continuous"
    return TrialConfig.from_dict(spec)


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    sim = simulate_trial(config, seed=args.seed, full=True)
    buf = io.StringIO()
    sim.data.to_csv(buf)
    _write_text(args.out, buf.getvalue())
    if args.full_out:
        _write_text(args.full_out, json.dumps(sim.to_json_dict(), indent=2) + "\n")
    return 0


_METHOD_FLAGS = (
    ("ncc", "--ncc"), ("opt", "--opt"), ("prior_prec_tau", "--prior-prec-tau"),
    ("prior_prec_eta", "--prior-prec-eta"), ("robustify", "--robustify"),
    ("weight", "--weight"), ("prec_theta", "--prec-theta"), ("prec_eta", "--prec-eta"),
    ("tau_a", "--tau-a"), ("tau_b", "--tau-b"), ("prec_a", "--prec-a"),
    ("prec_b", "--prec-b"), ("bucket_size", "--bucket-size"),
    ("burn_in", "--burn-in"), ("draws", "--draws"),
)


def cmd_analyze(args) -> int:
    data = TrialData.from_csv(args.data, endpoint=args.endpoint)
    params = {"alpha": args.alpha}
    for dest, _flag in _METHOD_FLAGS:
        value = getattr(args, dest)
        if value is not None:
            params[dest] = value
    if args.method in BAYESIAN_METHODS:
        params["seed"] = args.seed if args.seed is not None else 1
    elif args.seed is not None:
        print("note: --seed has no effect on frequentist methods", file=sys.stderr)
    result = analyze(data, args.arm, args.method, **params)
    _write_text(args.out, json.dumps(result.to_output_dict(), indent=2) + "\n")
    return 0


def cmd_plot(args) -> int:
    data = TrialData.from_csv(args.data)
    _write_text(args.out, trial_svg(data))
    return 0


def cmd_simstudy(args) -> int:
    scenarios = load_grid(args.grid)
    result = sim_study_par(scenarios, nsim=args.nsim, master_seed=args.seed,
                           workers=args.workers)
    buf = io.StringIO()
    result.to_csv(buf)
    _write_text(args.out, buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="platformtrials",
        description="Simulate and analyze platform trials with non-concurrent controls.")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="simulate one trial to CSV")
    _add_config_flags(ps)
    ps.add_argument("--seed", type=int, default=1)
    ps.add_argument("--out", default="-", help="CSV output path ('-' = stdout)")
    ps.add_argument("--full-out", dest="full_out",
                    help="also write periods, windows and generative values as JSON")
    ps.set_defaults(func=cmd_simulate)

    pa = sub.add_parser("analyze", help="analyze a trial CSV, write a JSON result")
    pa.add_argument("--data", required=True, help="trial CSV (j,response,treatment,period)")
    pa.add_argument("--method", default="fixmodel", choices=sorted(METHOD_REGISTRY))
    pa.add_argument("--arm", type=int, default=1)
    pa.add_argument("--alpha", type=float, default=0.025)
    pa.add_argument("--endpoint", default="auto", choices=("auto", "binary", "continuous"))
    pa.add_argument("--seed", type=int, help="chain seed for Bayesian methods (default 1)")
    pa.add_argument("--ncc", action=argparse.BooleanOptionalAction,
                    help="fixmodel: include non-concurrent periods (default)")
    pa.add_argument("--opt", type=int, choices=(1, 2), help="mapprior: NCC source grouping")
    pa.add_argument("--prior-prec-tau", type=float, dest="prior_prec_tau")
    pa.add_argument("--prior-prec-eta", type=float, dest="prior_prec_eta")
    pa.add_argument("--robustify", action=argparse.BooleanOptionalAction)
    pa.add_argument("--weight", type=float, help="mapprior: robust component weight")
    pa.add_argument("--prec-theta", type=float, dest="prec_theta")
    pa.add_argument("--prec-eta", type=float, dest="prec_eta")
    pa.add_argument("--tau-a", type=float, dest="tau_a")
    pa.add_argument("--tau-b", type=float, dest="tau_b")
    pa.add_argument("--prec-a", type=float, dest="prec_a")
    pa.add_argument("--prec-b", type=float, dest="prec_b")
    pa.add_argument("--bucket-size", type=int, dest="bucket_size")
    pa.add_argument("--burn-in", type=int, dest="burn_in")
    pa.add_argument("--draws", type=int)
    pa.add_argument("--out", default="-", help="JSON output path ('-' = stdout)")
    pa.set_defaults(func=cmd_analyze)

    pp = sub.add_parser("plot", help="draw the trial timeline as SVG")
    pp.add_argument("--data", required=True)
    pp.add_argument("--out", required=True, help="SVG output path")
    pp.set_defaults(func=cmd_plot)

    pg = sub.add_parser("simstudy", help="run a scenario grid, write operating characteristics")
    pg.add_argument("--grid", required=True, help="scenario grid file (.json or .csv)")
    pg.add_argument("--nsim", type=int, required=True)
    pg.add_argument("--seed", type=int, default=1)
    pg.add_argument("--workers", type=int, help="default: 90%% of detected cores")
    pg.add_argument("--out", default="-", help="CSV output path ('-' = stdout)")
    pg.set_defaults(func=cmd_simstudy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
