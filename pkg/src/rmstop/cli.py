"""Command-line entry point: ``rmstop {study,monitor,calibrate-cusum,threshold}``."""

import argparse
import logging
import os
import sys

from . import benchmarks as bm
from . import ingest
from .errors import CalibrationError, ConfigError, DomainError, MissingSeriesError, SeriesParseError
from .harness import emit_table, run_study
from .studies import DEFAULT_SEED, build_study
from .uncertainty import all_failure_threshold, clopper_pearson_upper_zero

log = logging.getLogger("rmstop")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2
SEED_ENV = "RMSTOP_SEED"
MONITOR_MODELS = ("ili", "bll") + ingest.MODELS


class _Parser(argparse.ArgumentParser):
    """Reports usage errors through :class:`ConfigError` so they exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def resolve_seed(cli_seed, default=DEFAULT_SEED):
    """``--seed`` wins over ``RMSTOP_SEED``, which wins over ``default``."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env is None or not env.strip():
        return default
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def build_parser():
    parser = _Parser(prog="rmstop", description="Boundary-claim stopping rules and simulation studies.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("study", help="run a Monte Carlo study and write its summary table")
    p.add_argument("--id", type=int, required=True, choices=range(1, 8), metavar="{1..7}")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--epsilon", type=float, help="closeness threshold for the study 5 monitor")

    p = sub.add_parser("monitor", help="run the rules over one series and write the trace")
    p.add_argument("--input")
    p.add_argument("--model", required=True, choices=MONITOR_MODELS)
    p.add_argument("--schema", choices=sorted(ingest.SCHEMAS))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--width-max", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--n-min", type=int)
    p.add_argument("--seed", type=int, help="seed of the synthetic fallback series")
    p.add_argument("--out", required=True)

    p = sub.add_parser("calibrate-cusum", help="calibrate a CUSUM threshold to a target ARL0")
    p.add_argument("--model", required=True, choices=("normal", "poisson"))
    p.add_argument("--arl0", type=float, default=500.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--runs", type=int, default=4000)
    p.add_argument("--k", type=float, default=0.025, help="normal reference value")
    p.add_argument("--lam0", type=float, default=0.01, help="poisson in-control rate")
    p.add_argument("--lam1", type=float, help="poisson shifted rate (default 2 * lam0)")

    p = sub.add_parser("threshold", help="all-failure run length and its Clopper-Pearson dual")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    return parser


def _cmd_study(args):
    if args.id in (5, 6):
        model = "ili" if args.id == 5 else "bll"
        margs = argparse.Namespace(input=None, model=model, schema=None, epsilon=args.epsilon,
                                   width_max=None, eta=None, n_min=None, seed=args.seed, out=args.out)
        return _cmd_monitor(margs)
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    seed = resolve_seed(args.seed)
    config = build_study(args.id, reps=args.reps, seed=seed)
    log.info("study %d: %d cells x %d reps, seed %d", args.id, len(config.cells), args.reps, seed)
    rows = run_study(config, workers=args.workers)
    metadata = {
        "study": args.id,
        "title": config.title,
        "reps": config.reps,
        "master_seed": seed,
        "study_config": dict(config.metadata),
        "cells": [{"scenario": c.scenario, **c.params} for c in config.cells],
    }
    emit_table(rows, args.format, args.out, metadata=metadata)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _monitor_config(args):
    model = args.model
    if model == "bll":
        kwargs = {k: v for k, v in (("epsilon", args.epsilon), ("width_max", args.width_max),
                                    ("eta", args.eta), ("n_min", args.n_min)) if v is not None}
        return ingest.bll_config(**kwargs)
    if args.epsilon is None:
        raise ConfigError(f"--epsilon is required for model {model}")
    if model in ("ili", "poisson_rate"):
        kwargs = {k: v for k, v in (("width_max", args.width_max), ("eta", args.eta),
                                    ("n_min", args.n_min)) if v is not None}
        cfg = ingest.ili_config(args.epsilon, **kwargs)
        if model == "poisson_rate":
            sc = cfg.scorecard
            cfg = ingest.MonitorConfig("poisson_rate", ingest.ScorecardConfig(
                sc.epsilon, sc.width_max, sc.eta, sc.n_min, n_max=10**9, probability_scale=False))
        return cfg
    sc = ingest.ScorecardConfig(
        epsilon=args.epsilon,
        width_max=args.epsilon if args.width_max is None else args.width_max,
        eta=0.01 if args.eta is None else args.eta,
        n_min=30 if args.n_min is None else args.n_min,
        n_max=10**9,
        probability_scale=model == "bounded_mean",
    )
    return ingest.MonitorConfig(model, sc)


def _load_or_fallback(args):
    schema = args.schema or ("ili" if args.model in ("ili", "poisson_rate") else "bll")
    generator = {"ili": ingest.gen_ili_series, "bll": ingest.gen_bll_series}.get(args.model)
    if args.input is not None:
        try:
            series = ingest.load_series_csv(args.input, schema)
            return series, {"source": "real", "input": args.input, "schema": schema, "seed": None}
        except MissingSeriesError:
            if generator is None:
                raise
            reason = f"input {args.input} not found"
    elif generator is None:
        raise ConfigError(f"--input is required for model {args.model}")
    else:
        reason = "no input given"
    default = ingest.ILI_DEFAULT_SEED if args.model == "ili" else ingest.BLL_DEFAULT_SEED
    seed = resolve_seed(args.seed, default=default)
    print(f"notice: {reason}; using synthetic {args.model} series (seed {seed})", file=sys.stderr)
    return generator(seed=seed), {"source": "synthetic", "input": args.input, "schema": schema,
                                  "seed": seed, "generator": generator.__name__}


def _cmd_monitor(args):
    config = _monitor_config(args)
    series, source = _load_or_fallback(args)
    trace = ingest.monitor_series(series, config=config, metadata={"data": source})
    trace.metadata["stops"] = {r.rule: r.tau for r in trace.reports}
    ingest.write_trace(trace, args.out)
    for report in trace.reports:
        print(f"{report.rule}: {'n=' + str(report.tau) if report.stopped else 'censored'}")
    print(f"wrote {len(trace)} steps to {args.out}")
    return EXIT_OK


def _cmd_calibrate(args):
    if args.model == "normal":
        model = bm.NormalCusumModel(args.k)
    else:
        lam1 = 2.0 * args.lam0 if args.lam1 is None else args.lam1
        model = bm.PoissonCusumModel(args.lam0, lam1)
    result = bm.calibrate_cusum_threshold(model, args.arl0, mc_runs=args.runs, seed=args.seed,
                                          strict=False)
    print(f"h = {result.h:.6g}")
    print(f"estimated ARL0 = {result.arl:.1f} (target {result.target:g})")
    if not result.within_tol:
        print("note: target not attainable within 5%; nearest attainable threshold reported")
    return EXIT_OK


def _cmd_threshold(args):
    n = all_failure_threshold(args.alpha, args.epsilon)
    print(n)
    print(f"clopper_pearson_upper({n}) = {clopper_pearson_upper_zero(n, args.alpha):.6g} < {args.epsilon:g}")
    if n > 1:
        prev = clopper_pearson_upper_zero(n - 1, args.alpha)
        print(f"clopper_pearson_upper({n - 1}) = {prev:.6g} >= {args.epsilon:g}")
    return EXIT_OK


COMMANDS = {"study": _cmd_study, "monitor": _cmd_monitor, "calibrate-cusum": _cmd_calibrate,
            "threshold": _cmd_threshold}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except (SeriesParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DomainError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
