"""Replication-study harness: simulate, fit every prior, aggregate metrics.

A study directory is fully determined by its design and base seed: data
seeds are base + replicate index, chain seeds are spun from
(base, replicate, prior position) through a seed sequence, and all
artifacts are written atomically with stable formatting, so a finished
directory is byte-identical across reruns (manifest timestamps aside).
Completed replicates are recorded in manifest.json and skipped on
resume.
"""
from __future__ import annotations

import csv
import datetime
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._util import sha256_text, write_atomic
from .errors import ConfigError, ResumeError, ShapeError
from .posterior import MetricSeries, replication_metrics, write_metrics_csv
from .priors import KINDS, PriorSpec
from .sampler import McmcConfig, fit
from .simulate import RateSchedule, SimConfig, simulate_poisson, simulate_ssa

__all__ = ["StudyDesign", "StudyResult", "builtin_designs", "run_study"]

GENERATORS = ("poisson", "ssa")
POINT_ESTIMATES = ("mean", "median")

DEFAULT_PRIORS = tuple(PriorSpec(kind=kind) for kind in KINDS)


@dataclass(frozen=True)
class StudyDesign:
    """One simulation experiment: truth, scale, priors and chain settings."""

    name: str
    schedule: RateSchedule
    population: float
    replicates: int = 10
    priors: tuple[PriorSpec, ...] = DEFAULT_PRIORS
    mcmc: McmcConfig = McmcConfig()
    horizon: int = 80
    generator: str = "poisson"
    seed_fraction: float = 3e-4

    def __post_init__(self):
        object.__setattr__(self, "priors", tuple(self.priors))
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if not 0 < self.seed_fraction < 1:
            raise ConfigError(
                f"seed_fraction must lie in (0, 1), got {self.seed_fraction}"
            )
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        if not self.priors:
            raise ConfigError("need at least one prior")
        kinds = [spec.kind for spec in self.priors]
        if len(set(kinds)) != len(kinds):
            raise ConfigError(f"prior kinds must be unique within a study, got {kinds}")
        if self.horizon < 2:
            raise ConfigError(f"horizon must be >= 2, got {self.horizon}")


@dataclass(frozen=True)
class StudyResult:
    """Aggregated study output: estimate stacks and metrics per prior kind.

    estimates[kind][param] is an (L, T) array of point-estimate paths;
    metrics[kind] is a (transmission, removal) MetricSeries pair, with
    NaN replication variance when L = 1.
    """

    design: StudyDesign
    out_dir: Path
    estimates: dict
    metrics: dict


def builtin_designs() -> list[StudyDesign]:
    """The four standard designs: 80 days in four 20-day pieces."""
    breakpoints = (21, 41, 61)
    rows = [
        ("design1", (0.15, 0.20, 0.10, 0.05), (0.05, 0.09, 0.10, 0.08), 1e6),
        ("design2", (0.10, 0.15, 0.10, 0.05), (0.05, 0.09, 0.10, 0.08), 1e6),
        ("design3", (0.07, 0.09, 0.08, 0.05), (0.02, 0.04, 0.06, 0.07), 1e7),
        ("design4", (0.05, 0.08, 0.05, 0.07), (0.02, 0.05, 0.04, 0.03), 1e7),
    ]
    return [
        StudyDesign(
            name=name,
            schedule=RateSchedule(
                breakpoints=breakpoints, beta_values=beta, gamma_values=gamma
            ),
            population=population,
        )
        for name, beta, gamma, population in rows
    ]


def _chain_seed(base: int, replicate: int, prior_index: int) -> int:
    return int(np.random.SeedSequence([base, replicate, prior_index]).generate_state(1)[0])


def _estimate_name(replicate: int) -> str:
    return f"estimates_rep{replicate:03d}.csv"


def _replicate_task(args) -> tuple[int, str]:
    """Simulate one replicate, fit every prior, render the estimate CSV."""
    design, replicate, point = args
    sim_config = SimConfig(
        n=design.population,
        i0=design.seed_fraction * design.population,
        r0=0.0,
        horizon=design.horizon,
        seed=design.mcmc.seed + replicate,
    )
    generate = simulate_poisson if design.generator == "poisson" else simulate_ssa
    series = generate(design.schedule, sim_config)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "param", "prior", "value"])
    for prior_index, spec in enumerate(design.priors):
        config = replace(
            design.mcmc, seed=_chain_seed(design.mcmc.seed, replicate, prior_index)
        )
        draws = fit(series, spec, config)
        reduce = np.mean if point == "mean" else np.median
        beta_hat = reduce(draws.beta_draws, axis=0)
        gamma_hat = reduce(draws.gamma_draws, axis=0)
        for t in range(design.horizon):
            writer.writerow([t + 1, "beta", spec.kind, repr(float(beta_hat[t]))])
        for t in range(design.horizon):
            writer.writerow([t + 1, "gamma", spec.kind, repr(float(gamma_hat[t]))])
    return replicate, buf.getvalue()


def _manifest_header(design: StudyDesign, point: str) -> dict:
    return {
        "design": design.name,
        "base_seed": design.mcmc.seed,
        "generator": design.generator,
        "horizon": design.horizon,
        "population": design.population,
        "seed_fraction": design.seed_fraction,
        "schedule": {
            "breakpoints": list(design.schedule.breakpoints),
            "beta_values": list(design.schedule.beta_values),
            "gamma_values": list(design.schedule.gamma_values),
        },
        "mcmc": design.mcmc.to_dict(),
        "priors": [
            {"kind": spec.kind, "digest": sha256_text(spec.to_config_text())}
            for spec in design.priors
        ],
        "point_estimate": point,
    }


def _load_manifest(path: Path, header: dict) -> dict:
    try:
        manifest = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ResumeError(
            f"manifest {path} is corrupted ({exc}); delete it to start the study fresh"
        ) from exc
    if not isinstance(manifest, dict) or "replicates" not in manifest:
        raise ResumeError(
            f"manifest {path} has an unexpected layout; delete it to start the study fresh"
        )
    for key, expected in header.items():
        if manifest.get(key) != expected:
            raise ResumeError(
                f"manifest {path} was written for different settings "
                f"({key}={manifest.get(key)!r}, now {expected!r}); "
                "delete the directory to start fresh"
            )
    return manifest


def _write_manifest(path: Path, manifest: dict) -> None:
    write_atomic(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _parse_estimates(path: Path, design: StudyDesign) -> dict:
    """Read one replicate's estimate CSV back into per-prior path arrays."""
    grids = {
        spec.kind: {
            "beta": np.full(design.horizon, np.nan),
            "gamma": np.full(design.horizon, np.nan),
        }
        for spec in design.priors
    }
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "param", "prior", "value"]:
            raise ShapeError(f"unexpected estimate header {reader.fieldnames} in {path}")
        for rec in reader:
            grids[rec["prior"]][rec["param"]][int(rec["t"]) - 1] = float(rec["value"])
    for kind, grid in grids.items():
        if np.isnan(grid["beta"]).any() or np.isnan(grid["gamma"]).any():
            raise ShapeError(f"estimate file {path} is missing {kind} rows")
    return grids


@dataclass(frozen=True)
class _PointPaths:
    beta: np.ndarray
    gamma: np.ndarray


def _single_replicate_metrics(
    beta_hat: np.ndarray, gamma_hat: np.ndarray, truth: RateSchedule
) -> tuple[MetricSeries, MetricSeries]:
    t = beta_hat.shape[1]
    out = []
    for param, hat, true in (
        ("beta", beta_hat[0], truth.beta_path(t)),
        ("gamma", gamma_hat[0], truth.gamma_path(t)),
    ):
        err = hat - true
        out.append(
            MetricSeries(param=param, mab=np.abs(err), mse=err**2, sd=np.full(t, np.nan))
        )
    return out[0], out[1]


def run_study(
    design: StudyDesign, out_dir, point: str = "mean", jobs: int = 1
) -> StudyResult:
    """Run (or resume) every replicate and write the study directory.

    Artifacts: estimates_repNNN.csv per replicate, metrics_<kind>.csv
    per prior, and manifest.json recording provenance and completion.
    """
    if point not in POINT_ESTIMATES:
        raise ConfigError(f"point must be one of {POINT_ESTIMATES}, got {point!r}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    header = _manifest_header(design, point)
    if manifest_path.exists():
        manifest = _load_manifest(manifest_path, header)
    else:
        manifest = dict(header, replicates={})
        _write_manifest(manifest_path, manifest)

    pending = []
    for replicate in range(1, design.replicates + 1):
        entry = manifest["replicates"].get(str(replicate))
        if entry is None or not (out_dir / entry["file"]).exists():
            pending.append(replicate)

    tasks = [(design, replicate, point) for replicate in pending]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replicate_task, tasks))
    else:
        results = [_replicate_task(task) for task in tasks]
    for replicate, text in results:
        name = _estimate_name(replicate)
        write_atomic(out_dir / name, text)
        manifest["replicates"][str(replicate)] = {
            "data_seed": design.mcmc.seed + replicate,
            "file": name,
            "completed_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        _write_manifest(manifest_path, manifest)

    per_replicate = [
        _parse_estimates(out_dir / _estimate_name(replicate), design)
        for replicate in range(1, design.replicates + 1)
    ]
    estimates: dict = {}
    metrics: dict = {}
    for spec in design.priors:
        beta_hat = np.vstack([rep[spec.kind]["beta"] for rep in per_replicate])
        gamma_hat = np.vstack([rep[spec.kind]["gamma"] for rep in per_replicate])
        estimates[spec.kind] = {"beta": beta_hat, "gamma": gamma_hat}
        if design.replicates >= 2:
            paths = [
                _PointPaths(beta=beta_hat[i], gamma=gamma_hat[i])
                for i in range(design.replicates)
            ]
            pair = replication_metrics(paths, design.schedule)
        else:
            pair = _single_replicate_metrics(beta_hat, gamma_hat, design.schedule)
        metrics[spec.kind] = pair
        write_metrics_csv(list(pair), out_dir / f"metrics_{spec.kind}.csv")
    return StudyResult(design=design, out_dir=out_dir, estimates=estimates, metrics=metrics)
