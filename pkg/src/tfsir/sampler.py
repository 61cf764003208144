"""Metropolis-within-Gibbs sampler for the daily-rate epidemic model.

One sweep updates, in order: every transmission-rate site, every
removal-rate site (adaptive single-site random-walk Metropolis under a
nonnegativity filter), then the latent scales and the global variances
by exact Gibbs draws. All randomness comes from one Generator seeded
from the config, so runs are bit-reproducible.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import sweep_sites
from ._util import sha256_text, write_atomic, write_atomic_bytes
from .data import CompartmentSeries, IncrementSeries, smooth3, to_increments
from .errors import ConfigError, ShapeError
from .likelihood import RatePath, term_constants
from .priors import (
    LatentScales,
    PriorSpec,
    _draw_scales_side,
    _global_ig_params,
    draw_invgamma,
    initial_scales,
    sample_prior_path,
    variance_vector,
)

__all__ = ["McmcConfig", "PosteriorDraws", "fit", "init_from_data", "run_chains"]

INIT_MODES = ("from-data", "from-prior", "fixed")

RATE_FLOOR = 1e-6
RATE_CEIL = 10.0


@dataclass(frozen=True)
class McmcConfig:
    """Chain-length, seeding and adaptation settings for one fit.

    iterations counts total sweeps; every thin-th sweep is recorded and
    the first burn_in recorded samples are then discarded, leaving
    iterations // thin - burn_in kept rows. Step-size adaptation runs
    through sweep adapt_until (default burn_in * thin, i.e. adaptation
    ends exactly when the kept window begins) and is frozen afterwards.

    likelihood_weight scales the data term in the acceptance ratio.
    Weight 0 targets the prior alone; in that mode the nonnegativity
    proposal filter is switched off so the chain explores the prior
    exactly as written (untruncated).
    """

    iterations: int = 50_000
    thin: int = 10
    burn_in: int = 3_000
    seed: int = 0
    adapt_until: int | None = None
    target_accept: float = 0.44
    init: str = "from-data"
    init_path: RatePath | None = None
    mean_lag: int = 1
    likelihood_weight: float = 1.0

    def __post_init__(self):
        if self.thin < 1 or self.iterations < self.thin:
            raise ConfigError(
                f"need iterations >= thin >= 1, got iterations={self.iterations} thin={self.thin}"
            )
        if self.burn_in < 0 or self.burn_in >= self.iterations // self.thin:
            raise ConfigError(
                f"burn_in must lie in [0, iterations/thin), got {self.burn_in} "
                f"with {self.iterations // self.thin} recorded samples"
            )
        if self.adapt_until is None:
            object.__setattr__(self, "adapt_until", self.burn_in * self.thin)
        if not 0 <= self.adapt_until <= self.burn_in * self.thin:
            raise ConfigError(
                f"adapt_until must lie in [0, burn_in*thin={self.burn_in * self.thin}], "
                f"got {self.adapt_until}"
            )
        if not 0.0 < self.target_accept < 1.0:
            raise ConfigError(f"target_accept must lie in (0, 1), got {self.target_accept}")
        if self.init not in INIT_MODES:
            raise ConfigError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "fixed" and self.init_path is None:
            raise ConfigError("init='fixed' requires init_path")
        if self.mean_lag not in (0, 1):
            raise ConfigError(f"mean_lag must be 0 or 1, got {self.mean_lag}")
        if self.likelihood_weight < 0:
            raise ConfigError(f"likelihood_weight must be >= 0, got {self.likelihood_weight}")

    @property
    def kept(self) -> int:
        return self.iterations // self.thin - self.burn_in

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "thin": self.thin,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "adapt_until": self.adapt_until,
            "target_accept": self.target_accept,
            "init": self.init,
            "mean_lag": self.mean_lag,
            "likelihood_weight": self.likelihood_weight,
        }


@dataclass(frozen=True)
class PosteriorDraws:
    """Kept MCMC samples plus acceptance diagnostics and provenance.

    beta_draws and gamma_draws are (kept, T); lam_draws/eta_draws are
    (kept, T-1) latent scales, nu_draws/xi_draws their auxiliaries
    (horseshoe only, else None). acceptance_* hold per-site acceptance
    rates measured after adaptation ended; step_* the frozen per-site
    proposal standard deviations.
    """

    beta_draws: np.ndarray
    gamma_draws: np.ndarray
    sigma2_beta_draws: np.ndarray
    sigma2_gamma_draws: np.ndarray
    lam_draws: np.ndarray | None = None
    eta_draws: np.ndarray | None = None
    nu_draws: np.ndarray | None = None
    xi_draws: np.ndarray | None = None
    acceptance_beta: np.ndarray | None = None
    acceptance_gamma: np.ndarray | None = None
    step_beta: np.ndarray | None = None
    step_gamma: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def kept(self) -> int:
        return self.beta_draws.shape[0]

    @property
    def t(self) -> int:
        return self.beta_draws.shape[1]

    def scales_at(self, row: int) -> LatentScales:
        """Reconstruct the latent-scale state of one kept sample."""
        if self.lam_draws is None:
            raise ValueError("latent scales were not stored with these draws")
        return LatentScales(
            lam=self.lam_draws[row].copy(),
            eta=self.eta_draws[row].copy(),
            sigma2_beta=float(self.sigma2_beta_draws[row]),
            sigma2_gamma=float(self.sigma2_gamma_draws[row]),
            nu=None if self.nu_draws is None else self.nu_draws[row].copy(),
            xi=None if self.xi_draws is None else self.xi_draws[row].copy(),
        )

    def to_csv_text(self) -> str:
        """Columnar rendering: sample,param,t,value.

        beta/gamma rows use day indices 1..T; the global variances use
        t = 0. Latent scales stay in the binary cache only.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sample", "param", "t", "value"])
        for row in range(self.kept):
            for t in range(self.t):
                writer.writerow([row, "beta", t + 1, repr(float(self.beta_draws[row, t]))])
            for t in range(self.t):
                writer.writerow([row, "gamma", t + 1, repr(float(self.gamma_draws[row, t]))])
            writer.writerow([row, "sigma2_beta", 0, repr(float(self.sigma2_beta_draws[row]))])
            writer.writerow([row, "sigma2_gamma", 0, repr(float(self.sigma2_gamma_draws[row]))])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        write_atomic(path, self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "PosteriorDraws":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["sample", "param", "t", "value"]:
                raise ShapeError(
                    f"unexpected draw-file header {reader.fieldnames} in {path}"
                )
            cells: dict[str, list[tuple[int, int, float]]] = {}
            for rec in reader:
                cells.setdefault(rec["param"], []).append(
                    (int(rec["sample"]), int(rec["t"]), float(rec["value"]))
                )
        if "beta" not in cells or "gamma" not in cells:
            raise ShapeError(f"draw file {path} lacks beta/gamma rows")

        def grid(param: str) -> np.ndarray:
            entries = cells[param]
            rows = max(e[0] for e in entries) + 1
            days = max(e[1] for e in entries)
            out = np.full((rows, days), np.nan)
            for sample, t, value in entries:
                out[sample, t - 1] = value
            if np.isnan(out).any():
                raise ShapeError(f"draw file {path} has missing {param} cells")
            return out

        def column(param: str, rows: int) -> np.ndarray:
            out = np.full(rows, np.nan)
            for sample, _, value in cells.get(param, []):
                out[sample] = value
            return out

        beta = grid("beta")
        gamma = grid("gamma")
        return cls(
            beta_draws=beta,
            gamma_draws=gamma,
            sigma2_beta_draws=column("sigma2_beta", beta.shape[0]),
            sigma2_gamma_draws=column("sigma2_gamma", beta.shape[0]),
        )

    def to_npz(self, path) -> None:
        arrays = {
            "beta_draws": self.beta_draws,
            "gamma_draws": self.gamma_draws,
            "sigma2_beta_draws": self.sigma2_beta_draws,
            "sigma2_gamma_draws": self.sigma2_gamma_draws,
            "provenance": np.asarray(json.dumps(self.provenance, sort_keys=True)),
        }
        for name in (
            "lam_draws", "eta_draws", "nu_draws", "xi_draws",
            "acceptance_beta", "acceptance_gamma", "step_beta", "step_gamma",
        ):
            value = getattr(self, name)
            if value is not None:
                arrays[name] = value
        buf = io.BytesIO()
        np.savez_compressed(buf, **arrays)
        write_atomic_bytes(path, buf.getvalue())

    @classmethod
    def from_npz(cls, path) -> "PosteriorDraws":
        with np.load(path, allow_pickle=False) as archive:
            def take(name):
                return archive[name] if name in archive.files else None

            return cls(
                beta_draws=archive["beta_draws"],
                gamma_draws=archive["gamma_draws"],
                sigma2_beta_draws=archive["sigma2_beta_draws"],
                sigma2_gamma_draws=archive["sigma2_gamma_draws"],
                lam_draws=take("lam_draws"),
                eta_draws=take("eta_draws"),
                nu_draws=take("nu_draws"),
                xi_draws=take("xi_draws"),
                acceptance_beta=take("acceptance_beta"),
                acceptance_gamma=take("acceptance_gamma"),
                step_beta=take("step_beta"),
                step_gamma=take("step_gamma"),
                provenance=json.loads(str(archive["provenance"])),
            )


def init_from_data(
    series: CompartmentSeries, increments: IncrementSeries, mean_lag: int = 1
) -> RatePath:
    """Method-of-moments starting path from observed increments.

    Divides each day's count by its rate multiplier, clips the result
    into [1e-6, 10] (absorbing zero denominators), and smooths with the
    3-point filter. Day 1, which owns no increment, copies day 2 before
    smoothing.
    """
    k_beta, c_beta, k_gamma, c_gamma = term_constants(series, increments, mean_lag)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta_raw = np.where(c_beta > 0, k_beta / np.where(c_beta > 0, c_beta, 1.0), 0.0)
        gamma_raw = np.where(c_gamma > 0, k_gamma / np.where(c_gamma > 0, c_gamma, 1.0), 0.0)
    beta = np.concatenate([[beta_raw[0]], beta_raw]).clip(RATE_FLOOR, RATE_CEIL)
    gamma = np.concatenate([[gamma_raw[0]], gamma_raw]).clip(RATE_FLOOR, RATE_CEIL)
    return RatePath(beta=smooth3(beta), gamma=smooth3(gamma))


def _initial_state(
    series: CompartmentSeries,
    increments: IncrementSeries,
    spec: PriorSpec,
    config: McmcConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, LatentScales]:
    t = series.t
    mode = config.init
    if mode == "from-data" and not (np.any(increments.dm[1:] > 0) or np.any(increments.dr[1:] > 0)):
        warnings.warn(
            "all increments are zero; falling back to prior initialization",
            RuntimeWarning,
            stacklevel=3,
        )
        mode = "from-prior"
    if mode == "fixed":
        path = config.init_path
        if path.t != t:
            raise ShapeError(f"init path has length {path.t}, data has {t} days")
        return path.beta.copy(), path.gamma.copy(), initial_scales(spec, t)
    if mode == "from-prior":
        path, scales = sample_prior_path(spec, t, rng)
        beta, gamma = path.beta.copy(), path.gamma.copy()
        if config.likelihood_weight > 0:
            beta = beta.clip(RATE_FLOOR, None)
            gamma = gamma.clip(RATE_FLOOR, None)
        return beta, gamma, scales
    path = init_from_data(series, increments, config.mean_lag)
    return path.beta.copy(), path.gamma.copy(), initial_scales(spec, t)


def fit(series: CompartmentSeries, spec: PriorSpec, config: McmcConfig) -> PosteriorDraws:
    """Run one MCMC chain on a compartment series and return kept draws.

    Increments are derived internally from the series. Deterministic
    given (series, spec, config): the same inputs reproduce the output
    bit for bit.
    """
    if series.t < 3:
        raise ShapeError(f"need at least 3 days of data, got {series.t}")
    t = series.t
    increments = to_increments(series)
    k_beta, c_beta, k_gamma, c_gamma = term_constants(series, increments, config.mean_lag)
    kb = np.concatenate([[0.0], k_beta]).astype(np.float64)
    cb = np.ascontiguousarray(np.concatenate([[0.0], c_beta]), dtype=np.float64)
    kg = np.concatenate([[0.0], k_gamma]).astype(np.float64)
    cg = np.ascontiguousarray(np.concatenate([[0.0], c_gamma]), dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    beta, gamma, scales = _initial_state(series, increments, spec, config, rng)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    lam, eta = scales.lam, scales.eta
    nu, xi = scales.nu, scales.xi
    s2b, s2g = scales.sigma2_beta, scales.sigma2_gamma

    weight = float(config.likelihood_weight)
    enforce_nonneg = weight > 0.0
    target = config.target_accept
    log_step_beta = np.full(t, np.log(0.01))
    log_step_gamma = np.full(t, np.log(0.01))
    step_beta = np.exp(log_step_beta)
    step_gamma = np.exp(log_step_gamma)
    acc_beta = np.empty(t, dtype=np.uint8)
    acc_gamma = np.empty(t, dtype=np.uint8)
    post_adapt_beta = np.zeros(t)
    post_adapt_gamma = np.zeros(t)

    kept = config.kept
    out_beta = np.empty((kept, t))
    out_gamma = np.empty((kept, t))
    out_lam = np.empty((kept, t - 1))
    out_eta = np.empty((kept, t - 1))
    out_s2b = np.empty(kept)
    out_s2g = np.empty(kept)
    horseshoe = spec.kind == "horseshoe"
    out_nu = np.empty((kept, t - 1)) if horseshoe else None
    out_xi = np.empty((kept, t - 1)) if horseshoe else None

    recorded = 0
    for sweep in range(1, config.iterations + 1):
        v_beta = variance_vector(spec.kind, lam, s2b, spec.epsilon, spec.lambda1)
        v_gamma = variance_vector(spec.kind, eta, s2g, spec.epsilon, spec.eta1)
        sweep_sites(rng, beta, v_beta, kb, cb, step_beta, weight, enforce_nonneg, acc_beta)
        sweep_sites(rng, gamma, v_gamma, kg, cg, step_gamma, weight, enforce_nonneg, acc_gamma)

        lam, nu = _draw_scales_side(
            spec.kind, np.diff(beta), lam, nu, s2b, spec.a, spec.b, spec.p, spec.epsilon, rng
        )
        eta, xi = _draw_scales_side(
            spec.kind, np.diff(gamma), eta, xi, s2g, spec.c, spec.d, spec.pi, spec.epsilon, rng
        )
        shape_b, scale_b = _global_ig_params(
            spec.kind, beta[0], np.diff(beta), lam,
            spec.a_sigma_beta, spec.b_sigma_beta, spec.lambda1,
        )
        s2b = float(draw_invgamma(rng, shape_b, scale_b))
        shape_g, scale_g = _global_ig_params(
            spec.kind, gamma[0], np.diff(gamma), eta,
            spec.a_sigma_gamma, spec.b_sigma_gamma, spec.eta1,
        )
        s2g = float(draw_invgamma(rng, shape_g, scale_g))

        if sweep <= config.adapt_until:
            gain = sweep**-0.6
            log_step_beta += gain * (acc_beta - target)
            log_step_gamma += gain * (acc_gamma - target)
            np.exp(log_step_beta, out=step_beta)
            np.exp(log_step_gamma, out=step_gamma)
        else:
            post_adapt_beta += acc_beta
            post_adapt_gamma += acc_gamma

        if sweep % config.thin == 0:
            recorded += 1
            row = recorded - config.burn_in - 1
            if row >= 0:
                out_beta[row] = beta
                out_gamma[row] = gamma
                out_lam[row] = lam
                out_eta[row] = eta
                out_s2b[row] = s2b
                out_s2g[row] = s2g
                if horseshoe:
                    out_nu[row] = nu
                    out_xi[row] = xi

    post_sweeps = config.iterations - config.adapt_until
    provenance = {
        "seed": config.seed,
        "config": config.to_dict(),
        "prior_kind": spec.kind,
        "prior_digest": sha256_text(spec.to_config_text()),
        "t": t,
        "n": series.n,
    }
    return PosteriorDraws(
        beta_draws=out_beta,
        gamma_draws=out_gamma,
        sigma2_beta_draws=out_s2b,
        sigma2_gamma_draws=out_s2g,
        lam_draws=out_lam,
        eta_draws=out_eta,
        nu_draws=out_nu,
        xi_draws=out_xi,
        acceptance_beta=post_adapt_beta / post_sweeps,
        acceptance_gamma=post_adapt_gamma / post_sweeps,
        step_beta=step_beta.copy(),
        step_gamma=step_gamma.copy(),
        provenance=provenance,
    )


def run_chains(
    series: CompartmentSeries, spec: PriorSpec, config: McmcConfig, n_chains: int
) -> list[PosteriorDraws]:
    """Independent chains with seeds config.seed + chain index.

    Results are ordered by chain index; chain i is exactly the fit one
    would get from a standalone run with that offset seed.
    """
    if n_chains < 1:
        raise ConfigError(f"n_chains must be >= 1, got {n_chains}")
    return [
        fit(series, spec, replace(config, seed=config.seed + i)) for i in range(n_chains)
    ]
