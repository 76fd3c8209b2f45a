"""Command-line front end.

Every subcommand writes either a CSV table (``--out``) or a JSON document on
stdout. Exit codes: 0 success, 1 bad arguments, 2 unreadable or invalid
model file, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import bayes, distributions, ensemble, hypothesis, neyman, profile
from .special import ConvergenceError

EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class ModelError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.9g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def emit_json(payload, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(_jsonable(payload), indent=2) + "\n")


def load_model(path):
    """Read a model JSON document ``{"N", "B", "dB", "Q_override"?, "seed"?}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from None
    if not isinstance(spec, dict):
        raise ModelError("model file must hold a JSON object")
    missing = [key for key in ("N", "B", "dB") if key not in spec]
    if missing:
        raise ModelError(f"model file lacks {', '.join(missing)}")
    unknown = set(spec) - {"N", "B", "dB", "Q_override", "seed"}
    if unknown:
        raise ModelError(f"unknown model fields: {', '.join(sorted(unknown))}")
    q = spec.get("Q_override")
    if q is not None and not (isinstance(q, (int, float)) and q > 0):
        raise ModelError(f"Q_override must be a positive number, got {q!r}")
    try:
        if isinstance(spec["N"], bool) or not isinstance(spec["N"], int):
            raise ValueError(f"N must be an integer, got {spec['N']!r}")
        return profile.CountingModel(spec["N"], float(spec["B"]), float(spec["dB"]), Q=q)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"invalid model: {exc}") from None


_GENERATORS = {
    "poisson": distributions.Poisson,
    "binomial": distributions.Binomial,
    "gaussian": distributions.Gaussian,
    "normal": distributions.Gaussian,
    "lognormal": distributions.LogNormal,
    "uniform": distributions.Uniform,
    "exponential": distributions.Exponential,
    "chisq": distributions.ChiSquare,
    "gamma": distributions.Gamma,
    "beta": distributions.Beta,
}


def parse_generator(text):
    """``name:p1,p2`` to a distribution, e.g. ``poisson:3.8`` or ``binomial:10,0.3``."""
    name, _, params = text.partition(":")
    cls = _GENERATORS.get(name.strip().lower())
    if cls is None:
        raise UsageError(f"unknown generator {name!r}")
    try:
        values = [float(v) for v in params.split(",") if v.strip()]
        if cls is distributions.Binomial and values:
            values[0] = int(values[0])
        return cls(*values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad generator {text!r}: {exc}") from None


def cmd_neyman_band(args):
    rule = neyman.OrderingRule.parse(args.rule)
    if not rule.uses_belt:
        raise UsageError("root-n intervals have no belt")
    belt = neyman.belt_with_step(rule, args.cl, args.smax, args.step, args.dmax)
    write_csv(args.out, ["s", "d_lo", "d_hi"], zip(belt.s_grid, belt.d_lo, belt.d_hi))


def cmd_interval_widths(args):
    counts = np.arange(args.dmax + 1)
    s_top = args.dmax + 5.0 * math.sqrt(args.dmax) + 10.0
    columns = [counts]
    for rule in ("central", "feldman-cousins", "mode-centered", "root-n"):
        belt = None
        if rule in ("feldman-cousins", "mode-centered"):
            belt = neyman.belt_with_step(rule, args.cl, s_top, args.step)
        lo, hi = neyman.interval_table(rule, counts, args.cl, belt)
        columns += [lo, hi]
    header = ["D", "central_lo", "central_hi", "fc_lo", "fc_hi", "mode_lo", "mode_hi", "rootn_lo", "rootn_hi"]
    write_csv(args.out, header, zip(*columns))


def cmd_coverage_scan(args):
    scan = neyman.coverage_scan(args.rule, args.cl, s_max=args.smax, step=args.step, belt_step=args.belt_step)
    write_csv(args.out, ["s", "coverage"], zip(scan.s, scan.coverage))
    emit_json({"rule": neyman.OrderingRule.parse(args.rule).value, "belt_grid_step": scan.grid_step})


def cmd_profile_interval(args):
    m = load_model(args.model)
    fit = profile.mle(m)
    interval = profile.wilks_interval(m, args.nsigma)
    emit_json({
        "N": m.N, "B": m.B, "dB": m.dB, "Q": m.Q, "k": m.k,
        "s_hat": fit.s_hat, "b_hat": fit.b_hat, "at_boundary": fit.at_boundary,
        "nsigma": args.nsigma, "lower": interval.lower, "upper": interval.upper,
        "sqrt_t0": profile.profile_significance(m),
    })


def cmd_profile_curve(args):
    m = load_model(args.model)
    s_values = np.round(np.arange(0.0, args.smax + args.step / 2, args.step), 12)
    curve = profile.profile_curve(m, s_values)
    write_csv(args.out, ["s", "neg_ln_lambda"], zip(curve.s_values, curve.neg_ln_lambda))


def cmd_pvalue(args):
    m = load_model(args.model)
    # background uncertainty neglected: null is Poisson(B)
    p = hypothesis.p_value(distributions.Poisson(m.B), m.N)
    emit_json({"N": m.N, "B": m.B, "p_value": p, "Z": hypothesis.z_value(p)})


def cmd_bayes_posterior(args):
    m = load_model(args.model)
    if args.prior == "flat":
        prior = bayes.SignalPrior.flat()
    else:
        prior = bayes.SignalPrior.gamma(args.q, args.M)
    grid = None
    if args.smax is not None:
        grid = np.round(np.linspace(0.0, args.smax, int(round(args.smax / bayes.GRID_SPACING)) + 1), 12)
    curve = bayes.signal_posterior(m, prior, grid)
    interval = bayes.credible_interval(curve, args.cl)
    if args.out:
        write_csv(args.out, ["s", "density"], zip(curve.s_values, curve.density))
    emit_json({
        "prior": prior.kind.value, "cl": args.cl,
        "lower": interval.lower, "upper": interval.upper,
        "mode": curve.mode, "normalization": curve.normalization,
    })


def cmd_bayes_factor(args):
    m = load_model(args.model)
    result = bayes.bayes_factor(m, args.s1)
    emit_json({
        "s1": args.s1, "Q": m.Q, "k": m.k,
        "p_D_H1": result.evidence_h1, "p_D_H0": result.evidence_h0,
        "B10": result.B10, "Z": result.Z,
    })


def cmd_ensemble_sim(args):
    gen = parse_generator(args.generator)
    if args.estimator == "mean":
        est, truth = ensemble.sample_mean, gen.mean
    else:
        est, truth = ensemble.sample_variance, gen.variance
    if args.truth is not None:
        truth = args.truth
    summary = ensemble.summarize_estimator(est, truth, gen, args.n, args.replicas, args.seed)
    emit_json({"generator": args.generator, "estimator": args.estimator, "truth": truth,
               "n_per_replica": args.n, "seed": args.seed, **summary.to_dict()})


def build_parser():
    parser = _Parser(prog="countstat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("neyman-band", help="belt edges d_lo(s), d_hi(s)")
    p.add_argument("--rule", default="central")
    p.add_argument("--cl", type=float, default=neyman.DEFAULT_CL)
    p.add_argument("--smax", type=float, default=neyman.DEFAULT_S_MAX)
    p.add_argument("--step", type=float, default=neyman.DEFAULT_STEP)
    p.add_argument("--dmax", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_neyman_band)

    p = sub.add_parser("interval-widths", help="intervals per count for all four rules")
    p.add_argument("--cl", type=float, default=neyman.DEFAULT_CL)
    p.add_argument("--dmax", type=int, default=50)
    p.add_argument("--step", type=float, default=neyman.DEFAULT_STEP)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interval_widths)

    p = sub.add_parser("coverage-scan", help="coverage probability versus s")
    p.add_argument("--rule", default="central")
    p.add_argument("--cl", type=float, default=neyman.DEFAULT_CL)
    p.add_argument("--smax", type=float, default=20.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--belt-step", type=float, default=neyman.DEFAULT_STEP)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coverage_scan)

    p = sub.add_parser("profile-interval", help="MLEs and the t = nsigma^2 interval")
    p.add_argument("--model", required=True)
    p.add_argument("--nsigma", type=float, default=1.0)
    p.set_defaults(func=cmd_profile_interval)

    p = sub.add_parser("profile-curve", help="-ln(lambda) versus s")
    p.add_argument("--model", required=True)
    p.add_argument("--smax", type=float, default=30.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile_curve)

    p = sub.add_parser("pvalue", help="background-only p-value and Z")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser("bayes-posterior", help="signal posterior and central credible interval")
    p.add_argument("--model", required=True)
    p.add_argument("--prior", choices=["flat", "gamma"], default="flat")
    p.add_argument("--q", type=float, default=1.0, help="gamma prior rate")
    p.add_argument("--M", type=float, default=0.0, help="gamma prior shape minus one")
    p.add_argument("--cl", type=float, default=0.68)
    p.add_argument("--smax", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bayes_posterior)

    p = sub.add_parser("bayes-factor", help="B10 for s = s1 against s = 0")
    p.add_argument("--model", required=True)
    p.add_argument("--s1", type=float, required=True)
    p.set_defaults(func=cmd_bayes_factor)

    p = sub.add_parser("ensemble-sim", help="Monte Carlo bias/variance/MSE of an estimator")
    p.add_argument("--generator", required=True, help="e.g. poisson:3.8 or gaussian:0,1")
    p.add_argument("--n", type=int, required=True, help="sample size per replica")
    p.add_argument("--replicas", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimator", choices=["mean", "variance"], default="mean")
    p.add_argument("--truth", type=float, default=None)
    p.set_defaults(func=cmd_ensemble_sim)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"countstat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"countstat: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ConvergenceError, ZeroDivisionError, FloatingPointError) as exc:
        print(f"countstat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"countstat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


def main():
    sys.exit(run())
