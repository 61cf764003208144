"""Command-line entry point: simulate, fit, summarize and study.

Exit codes: 0 success, 1 usage error (bad flags, message on stderr),
2 data or validation error. Output files are written through a
``.partial`` sibling and renamed, so an interrupted run never leaves a
half-written artifact under the final name.
"""
from __future__ import annotations

import argparse
import datetime
import sys
from dataclasses import replace
from pathlib import Path

from ._util import write_atomic
from .data import load_csv, moving_average, parse_csv_text
from .errors import TfsirError
from .posterior import (
    change_point_report,
    change_points_csv_text,
    summarize,
    summary_csv_text,
    write_summary_csv,
)
from .priors import PriorSpec
from .sampler import McmcConfig, PosteriorDraws, fit
from .simulate import RateSchedule, SimConfig, simulate_poisson, simulate_ssa, solve_ode
from .study import builtin_designs, run_study

__all__ = ["main", "entry"]

PRIOR_ALIASES = {
    "t": "student-t",
    "student-t": "student-t",
    "horseshoe": "horseshoe",
    "spikeslab": "spike-slab",
    "spike-slab": "spike-slab",
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _prior_kind(name: str) -> str:
    try:
        return PRIOR_ALIASES[name.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"unknown prior {name!r}; choose from {sorted(set(PRIOR_ALIASES))}"
        ) from None


def _prior_list(text: str) -> list[str]:
    kinds = [_prior_kind(part) for part in text.split(",") if part.strip()]
    if not kinds:
        raise argparse.ArgumentTypeError("need at least one prior")
    return kinds


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",")) if text else ()
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _iso_date(text: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _count_cell(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def _series_csv_text(series) -> str:
    lines = ["date,confirmed,recovered,deaths,population"]
    for idx, date in enumerate(series.dates):
        lines.append(
            f"{date.isoformat()},{_count_cell(series.m[idx])},"
            f"{_count_cell(series.r[idx])},0,{_count_cell(series.n)}"
        )
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def _cmd_simulate(args) -> int:
    if args.design is not None:
        design = builtin_designs()[args.design - 1]
        schedule = design.schedule
        population = args.population if args.population is not None else design.population
    else:
        if args.beta is None or args.gamma is None or args.population is None:
            raise TfsirError(
                "without --design, all of --beta, --gamma and --population are required"
            )
        schedule = RateSchedule(
            breakpoints=args.breakpoints, beta_values=args.beta, gamma_values=args.gamma
        )
        population = args.population
    config = SimConfig(
        n=population,
        i0=args.i0,
        r0=args.r0,
        horizon=args.horizon,
        seed=args.seed,
        start_date=args.start_date,
    )
    generate = {"poisson": simulate_poisson, "ssa": simulate_ssa, "ode": solve_ode}[args.generator]
    series = generate(schedule, config)
    _emit(_series_csv_text(series), args.out)
    return 0


def _load_series(args):
    if args.data == "-":
        return parse_csv_text(sys.stdin, population=args.population, name="<stdin>")
    return load_csv(args.data, population=args.population)


def _cmd_fit(args) -> int:
    series = _load_series(args)
    if args.smooth:
        series = moving_average(series)
    if args.prior_config is not None:
        spec = PriorSpec.load_config(args.prior_config)
    else:
        spec = PriorSpec(kind=args.prior)
    config = McmcConfig(
        iterations=args.iterations,
        thin=args.thin,
        burn_in=args.burnin,
        seed=args.seed,
        adapt_until=args.adapt_until,
        target_accept=args.target_accept,
        mean_lag=args.mean_lag,
    )
    draws = fit(series, spec, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    draws.to_csv(out / "draws.csv")
    draws.to_npz(out / "draws.npz")
    write_summary_csv(summarize(draws, args.level), out / "summary.csv")
    report = change_point_report(draws, threshold=args.threshold, level=args.level)
    write_atomic(out / "change_points.csv", change_points_csv_text(report))
    return 0


def _cmd_summarize(args) -> int:
    path = Path(args.draws)
    if path.suffix == ".npz":
        draws = PosteriorDraws.from_npz(path)
    else:
        draws = PosteriorDraws.from_csv(path)
    text = summary_csv_text(summarize(draws, args.level))
    _emit(text, args.out)
    return 0


def _cmd_study(args) -> int:
    base = builtin_designs()[args.design - 1]
    design = replace(
        base,
        replicates=args.replicates,
        priors=tuple(PriorSpec(kind=kind) for kind in args.priors),
        mcmc=McmcConfig(
            iterations=args.iterations, thin=args.thin, burn_in=args.burnin, seed=args.seed
        ),
        generator=args.generator,
    )
    run_study(design, args.out, point=args.point, jobs=args.jobs)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tfsir",
        description="Bayesian inference of time-varying epidemic transmission and removal rates.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sim = sub.add_parser(
        "simulate", help="generate a synthetic epidemic CSV", formatter_class=fmt
    )
    sim.add_argument("--design", type=int, choices=(1, 2, 3, 4), default=None,
                     help="built-in rate schedule and population")
    sim.add_argument("--beta", type=_float_list, default=None,
                     help="comma-separated per-segment transmission rates (custom schedule)")
    sim.add_argument("--gamma", type=_float_list, default=None,
                     help="comma-separated per-segment removal rates (custom schedule)")
    sim.add_argument("--breakpoints", type=_int_list, default=(),
                     help="comma-separated first days of new segments (custom schedule)")
    sim.add_argument("--population", type=float, default=None,
                     help="population size (defaults to the design's)")
    sim.add_argument("--generator", choices=("poisson", "ssa", "ode"), default="poisson",
                     help="daily Poisson counts, exact jump process, or deterministic ODE")
    sim.add_argument("--horizon", type=int, default=80, help="number of days")
    sim.add_argument("--i0", type=float, default=100.0, help="initial infectious count")
    sim.add_argument("--r0", type=float, default=0.0, help="initial removed count")
    sim.add_argument("--seed", type=int, default=0, help="random seed")
    sim.add_argument("--start-date", type=_iso_date, default=datetime.date(2020, 1, 1),
                     help="calendar date of day 1")
    sim.add_argument("--out", default="-", help="output CSV path, or - for stdout")
    sim.set_defaults(func=_cmd_simulate)

    fit_p = sub.add_parser(
        "fit", help="fit the model to a daily-count CSV", formatter_class=fmt
    )
    fit_p.add_argument("--data", required=True, help="input CSV path, or - for stdin")
    fit_p.add_argument("--population", type=float, default=None,
                       help="population size when the CSV lacks a population column")
    fit_p.add_argument("--prior", type=_prior_kind, default="student-t",
                       help="prior kind: t, horseshoe, or spikeslab")
    fit_p.add_argument("--prior-config", default=None,
                       help="key = value file overriding --prior and hyperparameters")
    fit_p.add_argument("--iterations", type=int, default=50_000, help="total MCMC sweeps")
    fit_p.add_argument("--thin", type=int, default=10, help="record every thin-th sweep")
    fit_p.add_argument("--burnin", type=int, default=3_000,
                       help="recorded samples to discard from the front")
    fit_p.add_argument("--seed", type=int, default=0, help="random seed")
    fit_p.add_argument("--adapt-until", type=int, default=None,
                       help="sweep where step adaptation stops (default burnin*thin)")
    fit_p.add_argument("--target-accept", type=float, default=0.44,
                       help="per-site acceptance target during adaptation")
    fit_p.add_argument("--mean-lag", type=int, choices=(0, 1), default=1,
                       help="use previous-day (1) or same-day (0) occupancies in Poisson means")
    fit_p.add_argument("--smooth", action=argparse.BooleanOptionalAction, default=True,
                       help="apply the 3-day moving average before fitting")
    fit_p.add_argument("--level", type=float, default=0.95, help="HPD level for summaries")
    fit_p.add_argument("--threshold", type=float, default=0.5,
                       help="inclusion-frequency threshold for change points")
    fit_p.add_argument("--out", required=True, help="output directory")
    fit_p.set_defaults(func=_cmd_fit)

    summ = sub.add_parser(
        "summarize", help="summarize saved draws into a band CSV", formatter_class=fmt
    )
    summ.add_argument("--draws", required=True, help="draws file (.csv or .npz)")
    summ.add_argument("--level", type=float, default=0.95, help="HPD level")
    summ.add_argument("--out", default="-", help="output CSV path, or - for stdout")
    summ.set_defaults(func=_cmd_summarize)

    study = sub.add_parser(
        "study", help="run a replication study end to end", formatter_class=fmt
    )
    study.add_argument("--design", type=int, choices=(1, 2, 3, 4), required=True,
                       help="built-in design number")
    study.add_argument("--priors", type=_prior_list, default=["student-t", "horseshoe", "spike-slab"],
                       help="comma-separated prior kinds, e.g. t,horseshoe,spikeslab")
    study.add_argument("--replicates", type=int, default=10, help="number of replicates")
    study.add_argument("--generator", choices=("poisson", "ssa"), default="poisson",
                       help="data-generating process")
    study.add_argument("--iterations", type=int, default=50_000, help="total MCMC sweeps")
    study.add_argument("--thin", type=int, default=10, help="record every thin-th sweep")
    study.add_argument("--burnin", type=int, default=3_000,
                       help="recorded samples to discard from the front")
    study.add_argument("--seed", type=int, default=0, help="base seed")
    study.add_argument("--point", choices=("mean", "median"), default="mean",
                       help="point estimate fed to the metrics")
    study.add_argument("--jobs", type=int, default=1, help="max parallel replicate workers")
    study.add_argument("--out", required=True, help="study output directory")
    study.set_defaults(func=_cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TfsirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())
