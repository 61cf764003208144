"""Shrinkage priors on successive differences of the daily rate paths.

Three hierarchies, all expressed as Gaussian scale mixtures so that one
random-walk kernel and one set of conjugate updates serve every case:

* ``student-t``: each difference is N(0, lam_t * sigma2) with
  lam_t ~ InvGamma(a, b), which marginalizes to a Student-t with 2a
  degrees of freedom and scale sqrt(b/a) * sigma.
* ``horseshoe``: each difference is N(0, lam_t^2 * sigma2) with
  lam_t half-Cauchy(0, 1), realized through the inverse-gamma pair
  lam_t^2 | nu_t ~ InvGamma(1/2, 1/nu_t), nu_t ~ InvGamma(1/2, 1) so
  every full conditional is a standard-family exact draw.
* ``spike-slab``: a two-component Gaussian mixture, N(0, sigma2) with
  probability p (the slab) and N(0, epsilon^2) otherwise (the spike),
  with binary inclusion indicators as the latent scales.

The first day's value gets its own diffuse Gaussian prior with variance
multiplier lambda1 (eta1 for the removal rate); the global variances
sigma2 carry inverse-gamma hyperpriors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit
from scipy.stats import invgamma

from .errors import ConfigError, DomainError, ShapeError
from .likelihood import RatePath

__all__ = [
    "KINDS",
    "PriorSpec",
    "LatentScales",
    "log_prior",
    "gibbs_update_scales",
    "gibbs_update_global",
    "sample_prior_path",
    "initial_scales",
    "variance_vector",
    "draw_invgamma",
]

KINDS = ("student-t", "horseshoe", "spike-slab")


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters for one fusion prior.

    Fields irrelevant to the chosen kind (for example ``a``..``d`` under
    the horseshoe) are carried but unused. Config files are flat
    ``key = value`` lines using these field names; see
    :meth:`from_config_text`.
    """

    kind: str
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d: float = 1.0
    a_sigma_beta: float = 0.1
    b_sigma_beta: float = 0.1
    a_sigma_gamma: float = 0.1
    b_sigma_gamma: float = 0.1
    p: float = 0.5
    pi: float = 0.5
    epsilon: float = 1e-4
    lambda1: float = 100.0
    eta1: float = 100.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown prior kind {self.kind!r}; expected one of {KINDS}")
        positive = {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "d": self.d,
            "a_sigma_beta": self.a_sigma_beta,
            "b_sigma_beta": self.b_sigma_beta,
            "a_sigma_gamma": self.a_sigma_gamma,
            "b_sigma_gamma": self.b_sigma_gamma,
            "lambda1": self.lambda1,
            "eta1": self.eta1,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        for name, value in (("p", self.p), ("pi", self.pi)):
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie strictly in (0, 1), got {value}")
        if not 0.0 < self.epsilon <= 1e-2:
            raise ConfigError(
                f"epsilon must lie in (0, 1e-2] so the spike stays narrow, got {self.epsilon}"
            )

    @property
    def df_beta(self) -> float:
        return 2.0 * self.a

    @property
    def scale_beta(self) -> float:
        return math.sqrt(self.b / self.a)

    @property
    def df_gamma(self) -> float:
        return 2.0 * self.c

    @property
    def scale_gamma(self) -> float:
        return math.sqrt(self.d / self.c)

    def to_config_text(self) -> str:
        """Flat key-value rendering, listing only fields the kind uses."""
        keys = [
            "a_sigma_beta",
            "b_sigma_beta",
            "a_sigma_gamma",
            "b_sigma_gamma",
            "lambda1",
            "eta1",
        ]
        if self.kind == "student-t":
            keys = ["a", "b", "c", "d"] + keys
        elif self.kind == "spike-slab":
            keys = ["p", "pi", "epsilon"] + keys
        lines = [f"kind = {self.kind}"]
        lines += [f"{key} = {getattr(self, key)!r}" for key in keys]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str) -> "PriorSpec":
        """Parse ``key = value`` lines; ``#`` starts a comment.

        ``kind`` is required; every other key is optional and defaults
        as in the dataclass. Unknown keys are an error.
        """
        values: dict[str, object] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key == "kind":
                values[key] = val
                continue
            if key not in cls.__dataclass_fields__:
                raise ConfigError(f"line {lineno}: unknown prior option {key!r}")
            try:
                values[key] = float(val)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key} needs a number, got {val!r}") from exc
        if "kind" not in values:
            raise ConfigError("prior config must set 'kind'")
        return cls(**values)

    def save_config(self, path) -> None:
        Path(path).write_text(self.to_config_text())

    @classmethod
    def load_config(cls, path) -> "PriorSpec":
        return cls.from_config_text(Path(path).read_text())


@dataclass
class LatentScales:
    """Chain-private latent state of one prior hierarchy.

    lam and eta hold the per-difference scales (inclusion indicators for
    spike-slab) for days 2..T, so both have length T-1. nu and xi are
    the inverse-gamma auxiliaries that only the horseshoe carries.
    """

    lam: np.ndarray
    eta: np.ndarray
    sigma2_beta: float
    sigma2_gamma: float
    nu: np.ndarray | None = None
    xi: np.ndarray | None = None

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)
        if self.lam.shape != self.eta.shape or self.lam.ndim != 1:
            raise ShapeError("lam and eta must be 1-d arrays of equal length")
        if not (self.sigma2_beta > 0 and self.sigma2_gamma > 0):
            raise DomainError("global variances must be positive")
        for name in ("nu", "xi"):
            aux = getattr(self, name)
            if aux is not None:
                aux = np.asarray(aux, dtype=float)
                if aux.shape != self.lam.shape:
                    raise ShapeError(f"{name} must match lam in length")
                setattr(self, name, aux)

    def copy(self) -> "LatentScales":
        return LatentScales(
            lam=self.lam.copy(),
            eta=self.eta.copy(),
            sigma2_beta=self.sigma2_beta,
            sigma2_gamma=self.sigma2_gamma,
            nu=None if self.nu is None else self.nu.copy(),
            xi=None if self.xi is None else self.xi.copy(),
        )


def _check_scales(scales: LatentScales, spec: PriorSpec, t: int) -> None:
    if scales.lam.size != t - 1:
        raise ShapeError(
            f"scale vectors have length {scales.lam.size}, expected {t - 1} for {t} days"
        )
    if spec.kind == "horseshoe":
        if scales.nu is None or scales.xi is None:
            raise ConfigError("horseshoe scales require nu and xi auxiliaries")
    elif scales.nu is not None or scales.xi is not None:
        raise ConfigError(f"{spec.kind} scales must not carry nu/xi auxiliaries")
    if spec.kind == "spike-slab":
        if not (np.isin(scales.lam, (0.0, 1.0)).all() and np.isin(scales.eta, (0.0, 1.0)).all()):
            raise ConfigError("spike-slab indicators must be 0 or 1")
    elif np.any(scales.lam <= 0) or np.any(scales.eta <= 0):
        raise DomainError("continuous scales must be positive")


def variance_vector(
    kind: str, lam: np.ndarray, sigma2: float, epsilon: float, init_mult: float
) -> np.ndarray:
    """Conditional Gaussian variances for one parameter's path.

    Entry 0 is the initial-value variance init_mult * sigma2; entries
    1..T-1 are the difference variances implied by the latent scales.
    """
    v = np.empty(lam.size + 1)
    v[0] = init_mult * sigma2
    if kind == "student-t":
        v[1:] = lam * sigma2
    elif kind == "horseshoe":
        v[1:] = lam * lam * sigma2
    else:
        v[1:] = np.where(lam == 1.0, sigma2, epsilon * epsilon)
    return v


def draw_invgamma(rng: np.random.Generator, shape, scale):
    """Inverse-gamma draw(s): scale / Gamma(shape, 1) elementwise."""
    scale = np.asarray(scale, dtype=float)
    g = rng.gamma(shape, 1.0, size=scale.shape if scale.shape else None)
    return scale / g


def _norm_logpdf(x, var):
    x = np.asarray(x, dtype=float)
    var = np.asarray(var, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi * var) + x * x / var)


def log_prior(path: RatePath, scales: LatentScales, spec: PriorSpec) -> float:
    """Joint log-density of the rate paths and all latent variables.

    Sums the conditional Gaussian terms for the initial values and every
    difference, the latent-scale hyperprior terms (evaluated in the
    squared-scale parameterization for the horseshoe), and the
    inverse-gamma terms for the global variances.
    """
    _check_scales(scales, spec, path.t)
    dbeta = np.diff(path.beta)
    dgamma = np.diff(path.gamma)
    s2b, s2g = scales.sigma2_beta, scales.sigma2_gamma

    total = invgamma.logpdf(s2b, spec.a_sigma_beta, scale=spec.b_sigma_beta)
    total += invgamma.logpdf(s2g, spec.a_sigma_gamma, scale=spec.b_sigma_gamma)
    total += _norm_logpdf(path.beta[0], spec.lambda1 * s2b)
    total += _norm_logpdf(path.gamma[0], spec.eta1 * s2g)

    if spec.kind == "student-t":
        total += invgamma.logpdf(scales.lam, spec.a, scale=spec.b).sum()
        total += invgamma.logpdf(scales.eta, spec.c, scale=spec.d).sum()
        total += _norm_logpdf(dbeta, scales.lam * s2b).sum()
        total += _norm_logpdf(dgamma, scales.eta * s2g).sum()
    elif spec.kind == "horseshoe":
        lam2 = scales.lam**2
        eta2 = scales.eta**2
        total += invgamma.logpdf(lam2, 0.5, scale=1.0 / scales.nu).sum()
        total += invgamma.logpdf(scales.nu, 0.5, scale=1.0).sum()
        total += invgamma.logpdf(eta2, 0.5, scale=1.0 / scales.xi).sum()
        total += invgamma.logpdf(scales.xi, 0.5, scale=1.0).sum()
        total += _norm_logpdf(dbeta, lam2 * s2b).sum()
        total += _norm_logpdf(dgamma, eta2 * s2g).sum()
    else:
        total += np.sum(
            scales.lam * math.log(spec.p) + (1.0 - scales.lam) * math.log(1.0 - spec.p)
        )
        total += np.sum(
            scales.eta * math.log(spec.pi) + (1.0 - scales.eta) * math.log(1.0 - spec.pi)
        )
        v_b = np.where(scales.lam == 1.0, s2b, spec.epsilon**2)
        v_g = np.where(scales.eta == 1.0, s2g, spec.epsilon**2)
        total += _norm_logpdf(dbeta, v_b).sum()
        total += _norm_logpdf(dgamma, v_g).sum()
    return float(total)


def _draw_scales_side(
    kind: str,
    diffs: np.ndarray,
    lam: np.ndarray,
    aux: np.ndarray | None,
    sigma2: float,
    ig_shape: float,
    ig_scale: float,
    incl_prob: float,
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Exact full-conditional draw of one side's latent scales.

    Returns (new_lam, new_aux); aux is only meaningful for the
    horseshoe, where lam is updated first from the current aux and then
    aux from the new squared scale.
    """
    if kind == "student-t":
        new_lam = draw_invgamma(rng, ig_shape + 0.5, ig_scale + diffs**2 / (2.0 * sigma2))
        return new_lam, None
    if kind == "horseshoe":
        lam2 = draw_invgamma(rng, 1.0, 1.0 / aux + diffs**2 / (2.0 * sigma2))
        new_aux = draw_invgamma(rng, 1.0, 1.0 + 1.0 / lam2)
        return np.sqrt(lam2), new_aux
    log_odds = (
        math.log(incl_prob)
        - math.log(1.0 - incl_prob)
        + _norm_logpdf(diffs, sigma2)
        - _norm_logpdf(diffs, epsilon**2)
    )
    w = expit(log_odds)
    new_lam = (rng.random(diffs.size) < w).astype(float)
    return new_lam, None


def _global_ig_params(
    kind: str,
    first_value: float,
    diffs: np.ndarray,
    lam: np.ndarray,
    ig_shape: float,
    ig_scale: float,
    init_mult: float,
) -> tuple[float, float]:
    """Shape and scale of the inverse-gamma conditional for one sigma2."""
    scale = ig_scale + first_value**2 / (2.0 * init_mult)
    if kind == "spike-slab":
        included = lam == 1.0
        shape = ig_shape + (1.0 + included.sum()) / 2.0
        scale += float(np.sum(diffs[included] ** 2)) / 2.0
    else:
        denom = lam if kind == "student-t" else lam * lam
        shape = ig_shape + (diffs.size + 1.0) / 2.0
        scale += float(np.sum(diffs**2 / (2.0 * denom)))
    return float(shape), float(scale)


def gibbs_update_scales(
    path: RatePath, scales: LatentScales, spec: PriorSpec, rng: np.random.Generator
) -> LatentScales:
    """Draw every per-difference scale from its exact full conditional.

    The transmission side is updated first, then the removal side; the
    input is left untouched.
    """
    _check_scales(scales, spec, path.t)
    dbeta = np.diff(path.beta)
    dgamma = np.diff(path.gamma)
    new_lam, new_nu = _draw_scales_side(
        spec.kind, dbeta, scales.lam, scales.nu, scales.sigma2_beta,
        spec.a, spec.b, spec.p, spec.epsilon, rng,
    )
    new_eta, new_xi = _draw_scales_side(
        spec.kind, dgamma, scales.eta, scales.xi, scales.sigma2_gamma,
        spec.c, spec.d, spec.pi, spec.epsilon, rng,
    )
    return replace(scales, lam=new_lam, eta=new_eta, nu=new_nu, xi=new_xi)


def gibbs_update_global(
    path: RatePath, scales: LatentScales, spec: PriorSpec, rng: np.random.Generator
) -> LatentScales:
    """Draw the two global variances from their inverse-gamma conditionals."""
    _check_scales(scales, spec, path.t)
    dbeta = np.diff(path.beta)
    dgamma = np.diff(path.gamma)
    shape_b, scale_b = _global_ig_params(
        spec.kind, path.beta[0], dbeta, scales.lam,
        spec.a_sigma_beta, spec.b_sigma_beta, spec.lambda1,
    )
    s2b = float(draw_invgamma(rng, shape_b, scale_b))
    shape_g, scale_g = _global_ig_params(
        spec.kind, path.gamma[0], dgamma, scales.eta,
        spec.a_sigma_gamma, spec.b_sigma_gamma, spec.eta1,
    )
    s2g = float(draw_invgamma(rng, shape_g, scale_g))
    return replace(scales, sigma2_beta=s2b, sigma2_gamma=s2g)


def _sample_scales_side(
    kind: str, size: int, ig_shape: float, ig_scale: float, incl_prob: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray | None]:
    if kind == "student-t":
        return draw_invgamma(rng, ig_shape, np.full(size, ig_scale)), None
    if kind == "horseshoe":
        aux = draw_invgamma(rng, 0.5, np.ones(size))
        lam2 = draw_invgamma(rng, 0.5, 1.0 / aux)
        return np.sqrt(lam2), aux
    return (rng.random(size) < incl_prob).astype(float), None


def sample_prior_path(
    spec: PriorSpec, t: int, rng: np.random.Generator
) -> tuple[RatePath, LatentScales]:
    """Ancestral draw from the full hierarchy over t days.

    Globals first, then latent scales, then the initial values and
    differences, accumulated into paths. No positivity truncation is
    applied: this characterizes the prior exactly as written, and prior
    draws can therefore go negative.
    """
    if t < 2:
        raise DomainError(f"need at least two days, got {t}")
    s2b = float(draw_invgamma(rng, spec.a_sigma_beta, spec.b_sigma_beta))
    s2g = float(draw_invgamma(rng, spec.a_sigma_gamma, spec.b_sigma_gamma))
    lam, nu = _sample_scales_side(spec.kind, t - 1, spec.a, spec.b, spec.p, rng)
    eta, xi = _sample_scales_side(spec.kind, t - 1, spec.c, spec.d, spec.pi, rng)
    v_beta = variance_vector(spec.kind, lam, s2b, spec.epsilon, spec.lambda1)
    v_gamma = variance_vector(spec.kind, eta, s2g, spec.epsilon, spec.eta1)
    beta = np.cumsum(rng.standard_normal(t) * np.sqrt(v_beta))
    gamma = np.cumsum(rng.standard_normal(t) * np.sqrt(v_gamma))
    scales = LatentScales(
        lam=lam, eta=eta, sigma2_beta=s2b, sigma2_gamma=s2g, nu=nu, xi=xi
    )
    return RatePath(beta=beta, gamma=gamma), scales


def initial_scales(spec: PriorSpec, t: int) -> LatentScales:
    """Deterministic neutral starting state: unit scales, everything included."""
    if t < 2:
        raise DomainError(f"need at least two days, got {t}")
    ones = np.ones(t - 1)
    aux = np.ones(t - 1) if spec.kind == "horseshoe" else None
    return LatentScales(
        lam=ones.copy(),
        eta=ones.copy(),
        sigma2_beta=1.0,
        sigma2_gamma=1.0,
        nu=aux,
        xi=None if aux is None else aux.copy(),
    )
