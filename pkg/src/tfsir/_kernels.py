"""Hot numeric loops, compiled with numba when it is available.

Every function here draws randomness only from the Generator passed in,
so results are bit-identical whether or not compilation happens (numba
reproduces numpy Generator streams exactly).
"""
from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def poisson_term_delta(k: float, c: float, x_old: float, x_new: float) -> float:
    """Change in k*log(x*c) - x*c when x moves from x_old to x_new.

    c <= 0 makes the term constant in x, so the delta is zero. A zero rate
    with k > 0 is an impossible outcome and contributes -inf (or +inf when
    leaving such a state).
    """
    if c <= 0.0 or x_new == x_old:
        return 0.0
    delta = -c * (x_new - x_old)
    if k > 0.0:
        if x_new == 0.0 and x_old == 0.0:
            return 0.0
        if x_new == 0.0:
            return -np.inf
        if x_old == 0.0:
            return np.inf
        delta += k * (math.log(x_new) - math.log(x_old))
    return delta


@njit(cache=True)
def sweep_sites(rng, x, var, k, c, steps, weight, enforce_nonneg, accepted):
    """One systematic scan of single-site random-walk updates over x.

    x[j] carries a Gaussian increment prior: x[0] ~ N(0, var[0]) and
    x[j] - x[j-1] ~ N(0, var[j]) for j >= 1. k[j], c[j] are the Poisson
    count and rate factor of the likelihood term owned by site j (both 0
    for j = 0, which has no term). Proposals below zero are rejected
    outright while enforce_nonneg is set. x and accepted are written in
    place; accepted[j] is 1 when the site moved.
    """
    t = x.shape[0]
    for j in range(t):
        old = x[j]
        prop = old + steps[j] * rng.standard_normal()
        accepted[j] = 0
        if enforce_nonneg and prop < 0.0:
            continue
        logr = 0.0
        if weight != 0.0:
            logr = weight * poisson_term_delta(k[j], c[j], old, prop)
        if j == 0:
            logr += (old * old - prop * prop) / (2.0 * var[0])
        else:
            dl_old = old - x[j - 1]
            dl_new = prop - x[j - 1]
            logr += (dl_old * dl_old - dl_new * dl_new) / (2.0 * var[j])
        if j + 1 < t:
            dr_old = x[j + 1] - old
            dr_new = x[j + 1] - prop
            logr += (dr_old * dr_old - dr_new * dr_new) / (2.0 * var[j + 1])
        u = rng.random()
        if math.log(u) < logr:
            x[j] = prop
            accepted[j] = 1


@njit(cache=True)
def gillespie_days(rng, beta_day, gamma_day, n, s0, i0, r0):
    """Continuous-time SIR jump process, rates frozen per day.

    beta_day[j], gamma_day[j] apply during the day ending at tick j
    (beta_day[0] is unused, matching the daily-increment convention).
    Returns S, I, R sampled at integer days 0..T-1.
    """
    t = beta_day.shape[0]
    s_out = np.empty(t, dtype=np.float64)
    i_out = np.empty(t, dtype=np.float64)
    r_out = np.empty(t, dtype=np.float64)
    s = s0
    i = i0
    r = r0
    s_out[0] = s
    i_out[0] = i
    r_out[0] = r
    for day in range(1, t):
        beta = beta_day[day]
        gamma = gamma_day[day]
        clock = 0.0
        while True:
            w_inf = beta * s * i / n
            w_rem = gamma * i
            w_tot = w_inf + w_rem
            if w_tot <= 0.0:
                break
            clock += rng.exponential(1.0 / w_tot)
            if clock >= 1.0:
                break
            if rng.random() * w_tot < w_inf:
                s -= 1.0
                i += 1.0
            else:
                i -= 1.0
                r += 1.0
        s_out[day] = s
        i_out[day] = i
        r_out[day] = r
    return s_out, i_out, r_out


@njit(cache=True)
def rk4_days(beta_day, gamma_day, n, s0, i0, r0, substeps):
    """Fixed-step RK4 integration of the SIR ODEs, sampled at integer days.

    Rates are piecewise constant per day with the same convention as
    gillespie_days. substeps is the number of RK4 steps per day.
    """
    t = beta_day.shape[0]
    s_out = np.empty(t, dtype=np.float64)
    i_out = np.empty(t, dtype=np.float64)
    r_out = np.empty(t, dtype=np.float64)
    s = s0
    i = i0
    r = r0
    s_out[0] = s
    i_out[0] = i
    r_out[0] = r
    h = 1.0 / substeps
    for day in range(1, t):
        beta = beta_day[day]
        gamma = gamma_day[day]
        for _ in range(substeps):
            k1s, k1i, k1r = _sir_rhs(beta, gamma, n, s, i)
            k2s, k2i, k2r = _sir_rhs(beta, gamma, n, s + 0.5 * h * k1s, i + 0.5 * h * k1i)
            k3s, k3i, k3r = _sir_rhs(beta, gamma, n, s + 0.5 * h * k2s, i + 0.5 * h * k2i)
            k4s, k4i, k4r = _sir_rhs(beta, gamma, n, s + h * k3s, i + h * k3i)
            s += h * (k1s + 2.0 * k2s + 2.0 * k3s + k4s) / 6.0
            i += h * (k1i + 2.0 * k2i + 2.0 * k3i + k4i) / 6.0
            r += h * (k1r + 2.0 * k2r + 2.0 * k3r + k4r) / 6.0
        s_out[day] = s
        i_out[day] = i
        r_out[day] = r
    return s_out, i_out, r_out


@njit(cache=True, inline="always")
def _sir_rhs(beta, gamma, n, s, i):
    infections = beta * s * i / n
    removals = gamma * i
    return -infections, infections - removals, removals
