"""Bayesian inference of time-varying epidemic transmission and removal rates.

Daily case counts are modeled as Poisson increments of an SIR process
whose transmission and removal rates change over time; shrinkage priors
on the day-over-day rate differences (Student-t, horseshoe, or
spike-and-slab) recover piecewise-constant rate histories and their
change points from a single realization.
"""

from .data import (
    CompartmentSeries,
    IncrementSeries,
    load_csv,
    moving_average,
    parse_csv_text,
    smooth3,
    to_increments,
)
from .errors import (
    ConfigError,
    DataIntegrityError,
    DateGapError,
    DomainError,
    ResumeError,
    SchemaError,
    ShapeError,
    TfsirError,
)
from .likelihood import RatePath, loglik, loglik_term_delta, loglik_terms, poisson_loglik
from .posterior import (
    ChangePoint,
    MetricSeries,
    SummaryBand,
    change_point_report,
    hpd_interval,
    replication_metrics,
    summarize,
)
from .priors import (
    LatentScales,
    PriorSpec,
    gibbs_update_global,
    gibbs_update_scales,
    log_prior,
    sample_prior_path,
)
from .sampler import McmcConfig, PosteriorDraws, fit, init_from_data, run_chains
from .simulate import RateSchedule, SimConfig, simulate_poisson, simulate_ssa, solve_ode
from .study import StudyDesign, StudyResult, builtin_designs, run_study

__version__ = "0.1.0"

__all__ = [
    "CompartmentSeries",
    "IncrementSeries",
    "load_csv",
    "parse_csv_text",
    "moving_average",
    "smooth3",
    "to_increments",
    "TfsirError",
    "SchemaError",
    "DataIntegrityError",
    "DateGapError",
    "ShapeError",
    "DomainError",
    "ConfigError",
    "ResumeError",
    "RatePath",
    "poisson_loglik",
    "loglik",
    "loglik_terms",
    "loglik_term_delta",
    "PriorSpec",
    "LatentScales",
    "log_prior",
    "gibbs_update_scales",
    "gibbs_update_global",
    "sample_prior_path",
    "McmcConfig",
    "PosteriorDraws",
    "fit",
    "init_from_data",
    "run_chains",
    "SummaryBand",
    "MetricSeries",
    "ChangePoint",
    "hpd_interval",
    "summarize",
    "replication_metrics",
    "change_point_report",
    "RateSchedule",
    "SimConfig",
    "simulate_poisson",
    "simulate_ssa",
    "solve_ode",
    "StudyDesign",
    "StudyResult",
    "builtin_designs",
    "run_study",
    "__version__",
]
