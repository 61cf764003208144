"""Epidemic count ingestion and preprocessing.

Reads daily cumulative case counts from CSV, converts them into
susceptible / infectious / removed compartments for a closed population,
optionally applies a three-point moving average to the infectious and
removed series, and derives the daily increment series that the Poisson
observation model consumes.
"""
from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass

import numpy as np

from .errors import DataIntegrityError, DateGapError, SchemaError, ShapeError

__all__ = [
    "CompartmentSeries",
    "IncrementSeries",
    "load_csv",
    "moving_average",
    "to_increments",
    "smooth3",
]


@dataclass(frozen=True)
class CompartmentSeries:
    """Daily S, I, R counts for a closed population of size n.

    dates is a contiguous run of calendar days; s, i, r are float vectors
    of equal length T >= 2. s + i + r must equal n at every day (exactly
    for raw counts, within one count for smoothed series).
    """

    dates: tuple[datetime.date, ...]
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    n: float

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        for name in ("s", "i", "r"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        t = len(self.dates)
        if t < 2:
            raise ShapeError(f"need at least 2 days, got {t}")
        if not (len(self.s) == len(self.i) == len(self.r) == t):
            raise ShapeError(
                f"length mismatch: dates={t} s={len(self.s)} i={len(self.i)} r={len(self.r)}"
            )
        for name in ("s", "i", "r"):
            v = getattr(self, name)
            if np.any(v < 0):
                day = int(np.argmax(v < 0))
                raise DataIntegrityError(f"negative {name} count on {self.dates[day]}")
        total = self.s + self.i + self.r
        worst = float(np.max(np.abs(total - self.n)))
        if worst > 1.0 + 1e-6:
            day = int(np.argmax(np.abs(total - self.n)))
            raise DataIntegrityError(
                f"s+i+r differs from n by {worst:g} on {self.dates[day]}"
            )
        for k in range(1, t):
            if (self.dates[k] - self.dates[k - 1]).days != 1:
                raise DateGapError(
                    f"dates not contiguous: {self.dates[k - 1]} -> {self.dates[k]}"
                )

    @property
    def t(self) -> int:
        return len(self.dates)

    @property
    def m(self) -> np.ndarray:
        """Cumulative diagnosed count, infectious plus removed."""
        return self.i + self.r


@dataclass(frozen=True)
class IncrementSeries:
    """Daily changes of the cumulative diagnosed and removed counts.

    dm[k] and dr[k] are the day k+1 increments; the first entries default
    to the day-1 totals themselves. Negative raw increments (data
    corrections) are clamped to zero and counted in ``clamped``, and
    values are integer-rounded so they can serve as Poisson outcomes.
    """

    dm: np.ndarray
    dr: np.ndarray
    clamped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dm", np.asarray(self.dm, dtype=float))
        object.__setattr__(self, "dr", np.asarray(self.dr, dtype=float))
        if len(self.dm) != len(self.dr):
            raise ShapeError(f"dm/dr length mismatch: {len(self.dm)} vs {len(self.dr)}")
        if np.any(self.dm < 0) or np.any(self.dr < 0):
            raise DataIntegrityError("increments must be nonnegative after clamping")

    @property
    def t(self) -> int:
        return len(self.dm)


_REQUIRED_COLUMNS = ("date", "confirmed", "deaths")


def load_csv(path, population: float | None = None) -> CompartmentSeries:
    """Load a `date,confirmed,recovered,deaths[,population]` CSV.

    The infectious count is confirmed minus recovered minus deaths, the
    removed count is recovered plus deaths, and susceptibles make up the
    remainder of the population. The recovered column may be absent
    (county-level sources report deaths only) and defaults to zero.
    Population comes from the `population` column or the argument.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return _parse_csv(fh, population, str(path))


def parse_csv_text(fh, population: float | None = None, name: str = "<stream>") -> CompartmentSeries:
    """Same as load_csv but reading from an open text stream."""
    return _parse_csv(fh, population, name)


def _parse_csv(fh, population, name):
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    for col in _REQUIRED_COLUMNS:
        if col not in header:
            raise SchemaError(f"{name}: missing required column '{col}'")
    has_recovered = "recovered" in header
    has_population = "population" in header
    if not has_population and population is None:
        raise SchemaError(f"{name}: no population column and no population argument")

    dates: list[datetime.date] = []
    i_vals: list[float] = []
    r_vals: list[float] = []
    n = population
    for rownum, row in enumerate(reader, start=2):
        try:
            day = datetime.date.fromisoformat(row["date"].strip())
        except ValueError as exc:
            raise SchemaError(f"{name} row {rownum}: bad date {row['date']!r}") from exc
        try:
            confirmed = float(row["confirmed"])
            deaths = float(row["deaths"])
            recovered = float(row["recovered"]) if has_recovered and row["recovered"] != "" else 0.0
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{name} row {rownum}: non-numeric count") from exc
        if has_population:
            row_n = float(row["population"])
            if n is None:
                n = row_n
            elif row_n != n:
                raise DataIntegrityError(
                    f"{name} row {rownum}: population changed from {n:g} to {row_n:g}"
                )
        infectious = confirmed - recovered - deaths
        removed = recovered + deaths
        if confirmed < 0 or recovered < 0 or deaths < 0:
            raise DataIntegrityError(f"{name} row {rownum} ({day}): negative raw count")
        if infectious < 0:
            raise DataIntegrityError(
                f"{name} row {rownum} ({day}): infectious count would be {infectious:g}"
            )
        if n is not None and infectious + removed > n:
            raise DataIntegrityError(
                f"{name} row {rownum} ({day}): susceptible count would be negative"
            )
        if dates and (day - dates[-1]).days != 1:
            raise DateGapError(f"{name} row {rownum}: gap between {dates[-1]} and {day}")
        dates.append(day)
        i_vals.append(infectious)
        r_vals.append(removed)

    if len(dates) < 2:
        raise ShapeError(f"{name}: need at least 2 data rows, got {len(dates)}")
    i_arr = np.array(i_vals)
    r_arr = np.array(r_vals)
    s_arr = n - i_arr - r_arr
    return CompartmentSeries(dates=tuple(dates), s=s_arr, i=i_arr, r=r_arr, n=float(n))


def smooth3(x: np.ndarray) -> np.ndarray:
    """Three-point moving average, shrinking to two points at each end."""
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        raise ShapeError(f"need at least 3 points to smooth, got {len(x)}")
    out = np.empty_like(x)
    out[1:-1] = (x[:-2] + x[1:-1] + x[2:]) / 3.0
    out[0] = (x[0] + x[1]) / 2.0
    out[-1] = (x[-2] + x[-1]) / 2.0
    return out


def moving_average(series: CompartmentSeries) -> CompartmentSeries:
    """Smooth I and R with the three-point filter; recompute S as n - I - R.

    The input series is left untouched.
    """
    i_s = smooth3(series.i)
    r_s = smooth3(series.r)
    s_s = series.n - i_s - r_s
    return CompartmentSeries(dates=series.dates, s=s_s, i=i_s, r=r_s, n=series.n)


def to_increments(series: CompartmentSeries) -> IncrementSeries:
    """Derive daily increments of M = I + R and of R.

    The first entries default to the day-1 totals. Negative increments
    (data corrections, smoothing artifacts) are clamped to zero and
    counted; the results are then rounded to the nearest integer (ties
    to even) so they are valid Poisson outcomes.
    """
    m = series.m
    dm = np.empty(series.t)
    dr = np.empty(series.t)
    dm[0] = m[0]
    dr[0] = series.r[0]
    dm[1:] = np.diff(m)
    dr[1:] = np.diff(series.r)
    clamped = int(np.sum(dm < 0) + np.sum(dr < 0))
    np.clip(dm, 0.0, None, out=dm)
    np.clip(dr, 0.0, None, out=dr)
    return IncrementSeries(dm=np.rint(dm), dr=np.rint(dr), clamped=clamped)
