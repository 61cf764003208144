"""Posterior summaries, replication metrics and change-point evidence.

Everything operates on immutable draw matrices and returns plain
dataclasses or CSV text; nothing mutates its inputs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._util import write_atomic
from .errors import DomainError, ShapeError
from .sampler import PosteriorDraws
from .simulate import RateSchedule

__all__ = [
    "SummaryBand",
    "MetricSeries",
    "ChangePoint",
    "hpd_interval",
    "summarize",
    "replication_metrics",
    "change_point_report",
    "summary_csv_text",
    "metrics_csv_text",
    "change_points_csv_text",
    "write_summary_csv",
    "write_metrics_csv",
]


@dataclass(frozen=True)
class SummaryBand:
    """Pointwise posterior summary for one parameter on one day."""

    t: int
    param: str
    mean: float
    median: float
    hpd_lo: float
    hpd_hi: float


@dataclass(frozen=True)
class MetricSeries:
    """Replication metrics over days 1..T for one parameter.

    sd follows the replication-variance formula (sum of squared
    deviations over L-1, no square root); sd_root exposes its square
    root under an explicit name.
    """

    param: str
    mab: np.ndarray
    mse: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        for name in ("mab", "mse", "sd"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.mab.shape == self.mse.shape == self.sd.shape) or self.mab.ndim != 1:
            raise ShapeError("metric vectors must be 1-d and equally long")

    @property
    def sd_root(self) -> np.ndarray:
        return np.sqrt(self.sd)


class ChangePoint(NamedTuple):
    t: int
    param: str
    evidence: object


def hpd_interval(samples, level: float) -> tuple[float, float]:
    """Shortest interval spanned by ceil(level*n) consecutive order statistics.

    Ties between equally short windows resolve to the smallest lower
    bound. The result always contains at least a level fraction of the
    samples.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    if n < 10:
        raise ShapeError(f"need at least 10 samples for an HPD interval, got {n}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    m = math.ceil(level * n)
    sorted_samples = np.sort(samples)
    widths = sorted_samples[m - 1 :] - sorted_samples[: n - m + 1]
    start = int(np.argmin(widths))
    return float(sorted_samples[start]), float(sorted_samples[start + m - 1])


def summarize(draws: PosteriorDraws, level: float = 0.95) -> list[SummaryBand]:
    """Per-day mean, median and HPD bounds for both rate parameters.

    Bands are ordered with all transmission-rate days first, then all
    removal-rate days.
    """
    if draws.kept == 0:
        raise ShapeError("no kept samples to summarize")
    bands: list[SummaryBand] = []
    for param, matrix in (("beta", draws.beta_draws), ("gamma", draws.gamma_draws)):
        means = matrix.mean(axis=0)
        medians = np.median(matrix, axis=0)
        for t in range(matrix.shape[1]):
            lo, hi = hpd_interval(matrix[:, t], level)
            bands.append(
                SummaryBand(
                    t=t + 1,
                    param=param,
                    mean=float(means[t]),
                    median=float(medians[t]),
                    hpd_lo=lo,
                    hpd_hi=hi,
                )
            )
    return bands


def replication_metrics(
    estimates, truth: RateSchedule
) -> tuple[MetricSeries, MetricSeries]:
    """Aggregate per-replicate estimate paths against the true schedule.

    estimates is a sequence of L >= 2 paths, each with .beta and .gamma
    of a common length T. Returns one MetricSeries per parameter: the
    mean absolute bias, mean squared error, and replication variance of
    the estimates at each day.
    """
    if len(estimates) < 2:
        raise ShapeError(f"need at least 2 replicates, got {len(estimates)}")
    beta_hat = np.vstack([np.asarray(e.beta, dtype=float) for e in estimates])
    gamma_hat = np.vstack([np.asarray(e.gamma, dtype=float) for e in estimates])
    if beta_hat.shape != gamma_hat.shape:
        raise ShapeError("beta and gamma estimate shapes differ across replicates")
    t = beta_hat.shape[1]
    out = []
    for param, hat, true in (
        ("beta", beta_hat, truth.beta_path(t)),
        ("gamma", gamma_hat, truth.gamma_path(t)),
    ):
        err = hat - true
        center = hat.mean(axis=0)
        out.append(
            MetricSeries(
                param=param,
                mab=np.abs(err).mean(axis=0),
                mse=(err**2).mean(axis=0),
                sd=((hat - center) ** 2).sum(axis=0) / (hat.shape[0] - 1),
            )
        )
    return out[0], out[1]


def change_point_report(
    draws: PosteriorDraws, threshold: float = 0.5, level: float = 0.95
) -> list[ChangePoint]:
    """Days whose rate change shows posterior evidence.

    With inclusion indicators available (spike-slab draws), day t is
    flagged when its posterior inclusion frequency strictly exceeds
    threshold, and the frequency is the evidence. Otherwise the
    equal-tailed interval of the day-over-day difference at the given
    level must exclude zero, and the interval is the evidence.
    """
    if draws.kept == 0:
        raise ShapeError("no kept samples")
    use_indicators = (
        draws.provenance.get("prior_kind") == "spike-slab" and draws.lam_draws is not None
    )
    report: list[ChangePoint] = []
    for param, matrix, indicators in (
        ("beta", draws.beta_draws, draws.lam_draws),
        ("gamma", draws.gamma_draws, draws.eta_draws),
    ):
        if use_indicators:
            freq = indicators.mean(axis=0)
            for j in range(freq.size):
                if freq[j] > threshold:
                    report.append(ChangePoint(t=j + 2, param=param, evidence=float(freq[j])))
        else:
            diffs = np.diff(matrix, axis=1)
            tail = (1.0 - level) / 2.0
            lo = np.quantile(diffs, tail, axis=0)
            hi = np.quantile(diffs, 1.0 - tail, axis=0)
            for j in range(diffs.shape[1]):
                if lo[j] > 0.0 or hi[j] < 0.0:
                    report.append(
                        ChangePoint(
                            t=j + 2, param=param, evidence=(float(lo[j]), float(hi[j]))
                        )
                    )
    return report


def summary_csv_text(bands: list[SummaryBand]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "param", "mean", "median", "hpd_lo", "hpd_hi"])
    for band in bands:
        writer.writerow(
            [band.t, band.param, repr(band.mean), repr(band.median),
             repr(band.hpd_lo), repr(band.hpd_hi)]
        )
    return buf.getvalue()


def _metric_cell(value: float) -> str:
    return "NA" if math.isnan(value) else repr(float(value))


def metrics_csv_text(series_list: list[MetricSeries]) -> str:
    """Rows t,param,mab,mse,sd,sd_root; NaN renders as NA (undefined)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "param", "mab", "mse", "sd", "sd_root"])
    for series in series_list:
        roots = series.sd_root
        for t in range(series.mab.size):
            writer.writerow(
                [t + 1, series.param, _metric_cell(series.mab[t]), _metric_cell(series.mse[t]),
                 _metric_cell(series.sd[t]), _metric_cell(roots[t])]
            )
    return buf.getvalue()


def change_points_csv_text(report: list[ChangePoint]) -> str:
    """Rows t,param,lo,hi,frequency; interval evidence fills lo/hi,
    inclusion evidence fills frequency."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "param", "lo", "hi", "frequency"])
    for point in report:
        if isinstance(point.evidence, tuple):
            lo, hi = point.evidence
            writer.writerow([point.t, point.param, repr(lo), repr(hi), ""])
        else:
            writer.writerow([point.t, point.param, "", "", repr(float(point.evidence))])
    return buf.getvalue()


def write_summary_csv(bands: list[SummaryBand], path) -> None:
    write_atomic(path, summary_csv_text(bands))


def write_metrics_csv(series_list: list[MetricSeries], path) -> None:
    write_atomic(path, metrics_csv_text(series_list))
