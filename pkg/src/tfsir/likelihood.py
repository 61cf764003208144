"""Poisson observation log-likelihood for daily epidemic increments.

The observation model treats each day's new diagnoses and removals as
independent Poisson counts whose means are the current transmission and
removal rates times compartment occupancies. Everything here is a pure
function of immutable inputs, so evaluation is safe to share across
threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._kernels import poisson_term_delta
from .data import CompartmentSeries, IncrementSeries
from .errors import DomainError, ShapeError

__all__ = [
    "RatePath",
    "poisson_loglik",
    "term_constants",
    "loglik",
    "loglik_terms",
    "loglik_term_delta",
]


@dataclass(frozen=True)
class RatePath:
    """Daily transmission (beta) and removal (gamma) rates for days 1..T.

    Construction does not require nonnegativity (untruncated prior draws
    live here too); likelihood evaluation does, and checks it.
    """

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        if beta.ndim != 1 or gamma.ndim != 1:
            raise ShapeError("rate paths must be one-dimensional")
        if beta.shape != gamma.shape:
            raise ShapeError(
                f"beta and gamma lengths differ: {beta.size} vs {gamma.size}"
            )
        if beta.size < 2:
            raise ShapeError("rate paths need at least two days")

    @property
    def t(self) -> int:
        return self.beta.size


def poisson_loglik(k, mu):
    """log of the Poisson pmf, k*log(mu) - mu - logGamma(k+1), elementwise.

    Conventions: mu == 0 gives 0 when k == 0 and -inf when k > 0.
    """
    k = np.asarray(k, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = k * np.log(mu) - mu - gammaln(k + 1.0)
    vals = np.where(mu == 0.0, np.where(k == 0.0, 0.0, -np.inf), vals)
    if vals.ndim == 0:
        return float(vals)
    return vals


def term_constants(
    series: CompartmentSeries, increments: IncrementSeries, mean_lag: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-day observed counts and rate multipliers for days 2..T.

    Returns (k_beta, c_beta, k_gamma, c_gamma), each of length T-1: the
    Poisson mean for the day-t diagnosis count is beta(t) * c_beta[t-2]
    and for the removal count gamma(t) * c_gamma[t-2]. mean_lag selects
    whether the occupancies come from day t-1 (1, the default) or day t
    (0).
    """
    if mean_lag not in (0, 1):
        raise DomainError(f"mean_lag must be 0 or 1, got {mean_lag}")
    if increments.t != series.t:
        raise ShapeError(
            f"increment length {increments.t} does not match series length {series.t}"
        )
    if mean_lag == 1:
        s, i = series.s[:-1], series.i[:-1]
    else:
        s, i = series.s[1:], series.i[1:]
    c_beta = s * i / series.n
    c_gamma = i.copy()
    return increments.dm[1:], c_beta, increments.dr[1:], c_gamma


def loglik_terms(
    path: RatePath,
    series: CompartmentSeries,
    increments: IncrementSeries,
    mean_lag: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise log-likelihood contributions for days 2..T.

    Returns (beta_terms, gamma_terms); their sums over all days give the
    full log-likelihood.
    """
    if path.t != series.t:
        raise ShapeError(
            f"rate path length {path.t} does not match series length {series.t}"
        )
    if np.any(path.beta < 0) or np.any(path.gamma < 0):
        raise DomainError("rates must be nonnegative for likelihood evaluation")
    k_beta, c_beta, k_gamma, c_gamma = term_constants(series, increments, mean_lag)
    beta_terms = poisson_loglik(k_beta, path.beta[1:] * c_beta)
    gamma_terms = poisson_loglik(k_gamma, path.gamma[1:] * c_gamma)
    return beta_terms, gamma_terms


def loglik(
    path: RatePath,
    series: CompartmentSeries,
    increments: IncrementSeries,
    mean_lag: int = 1,
) -> float:
    """Total Poisson log-likelihood of the increments under the rate path."""
    beta_terms, gamma_terms = loglik_terms(path, series, increments, mean_lag)
    return float(np.sum(beta_terms) + np.sum(gamma_terms))


def loglik_term_delta(
    path: RatePath,
    series: CompartmentSeries,
    increments: IncrementSeries,
    t: int,
    which: str,
    new_value: float,
    mean_lag: int = 1,
) -> float:
    """Change in loglik from setting one day's rate to new_value.

    Touches only the single affected Poisson term, so it is O(1); the
    result matches a full recompute. t is the 1-based day, 2 <= t <= T.
    """
    if not 2 <= t <= path.t:
        raise DomainError(f"day index must be in [2, {path.t}], got {t}")
    if new_value < 0:
        raise DomainError(f"rates must be nonnegative, got {new_value}")
    if which not in ("beta", "gamma"):
        raise DomainError(f"which must be 'beta' or 'gamma', got {which!r}")
    if path.t != series.t:
        raise ShapeError(
            f"rate path length {path.t} does not match series length {series.t}"
        )
    k_beta, c_beta, k_gamma, c_gamma = term_constants(series, increments, mean_lag)
    j = t - 2
    if which == "beta":
        k, c, old = k_beta[j], c_beta[j], path.beta[t - 1]
    else:
        k, c, old = k_gamma[j], c_gamma[j], path.gamma[t - 1]
    return poisson_term_delta(float(k), float(c), float(old), float(new_value))
