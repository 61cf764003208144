"""Tests for the Poisson increment log-likelihood and its O(1) deltas."""
import datetime
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln
from scipy.stats import poisson as sp_poisson

from tfsir.data import CompartmentSeries, IncrementSeries, to_increments
from tfsir.errors import DomainError, ShapeError
from tfsir.likelihood import (
    RatePath,
    loglik,
    loglik_term_delta,
    loglik_terms,
    poisson_loglik,
    term_constants,
)


def _days(start, count):
    d0 = datetime.date.fromisoformat(start)
    return tuple(d0 + datetime.timedelta(days=k) for k in range(count))


def _series(s, i, r, n):
    return CompartmentSeries(dates=_days("2020-03-01", len(s)), s=s, i=i, r=r, n=n)


def _random_instance(rng, t, n=1e6):
    """A consistent (series, increments, path) triple with t days."""
    i = rng.integers(50, 5000, size=t).astype(float)
    r = np.cumsum(rng.integers(0, 300, size=t)).astype(float)
    series = _series(n - i - r, i, r, n)
    path = RatePath(beta=rng.uniform(0.01, 2.0, size=t), gamma=rng.uniform(0.01, 2.0, size=t))
    return series, to_increments(series), path


# ---------------------------------------------------------------- poisson_loglik

def test_poisson_loglik_matches_scipy_on_grid():
    k = np.arange(0, 40, dtype=float)
    for mu in (0.3, 1.0, 7.5, 134.865, 2000.0):
        ours = poisson_loglik(k, np.full_like(k, mu))
        ref = sp_poisson.logpmf(k.astype(int), mu)
        assert np.allclose(ours, ref, rtol=1e-10, atol=1e-10)


def test_poisson_loglik_zero_mean_conventions():
    assert poisson_loglik(0.0, 0.0) == 0.0
    assert poisson_loglik(3.0, 0.0) == -np.inf
    out = poisson_loglik(np.array([0.0, 2.0]), np.array([0.0, 0.0]))
    assert out[0] == 0.0 and out[1] == -np.inf


def test_log_factorial_exact_up_to_170():
    # logGamma(k+1) against exact integer factorials, the full float range
    for k in range(171):
        exact = math.log(math.factorial(k)) if k > 1 else 0.0
        assert gammaln(k + 1) == pytest.approx(exact, rel=1e-12, abs=1e-12)
        # poisson_loglik(k, 1) = -1 - log k!
        assert poisson_loglik(float(k), 1.0) == pytest.approx(-1.0 - exact, rel=1e-12, abs=1e-12)


def test_single_term_high_precision_value():
    mpmath = pytest.importorskip("mpmath")
    # one beta term: k = 135, S = 999000, I = 900, N = 1e6, beta = 0.15
    series = _series(
        s=[999000.0, 998865.0], i=[900.0, 1035.0], r=[100.0, 100.0], n=1e6
    )
    inc = to_increments(series)
    assert inc.dm[1] == 135.0 and inc.dr[1] == 0.0
    path = RatePath(beta=[0.15, 0.15], gamma=[0.0, 0.0])
    mpmath.mp.dps = 40
    mu = mpmath.mpf("134.865")
    expected = 135 * mpmath.log(mu) - mu - mpmath.loggamma(136)
    assert loglik(path, series, inc) == pytest.approx(float(expected), rel=1e-12, abs=1e-10)


def test_loglik_zero_events_zero_rates_is_zero():
    series = _series(s=[1000.0] * 4, i=[50.0] * 4, r=[10.0] * 4, n=1060.0)
    inc = to_increments(series)
    assert np.all(inc.dm[1:] == 0) and np.all(inc.dr[1:] == 0)
    path = RatePath(beta=np.zeros(4), gamma=np.zeros(4))
    assert loglik(path, series, inc) == 0.0


def test_loglik_impossible_outcome_is_minus_inf():
    # a positive count with a zero rate
    series = _series(s=[1000.0, 997.0], i=[50.0, 53.0], r=[10.0, 10.0], n=1060.0)
    inc = to_increments(series)
    assert inc.dm[1] == 3.0
    path = RatePath(beta=[0.0, 0.0], gamma=[0.1, 0.1])
    assert loglik(path, series, inc) == -np.inf


# ---------------------------------------------------------------- term_constants

def test_term_constants_alignment_both_lags():
    s = np.array([900.0, 880.0, 850.0, 810.0])
    i = np.array([80.0, 95.0, 115.0, 140.0])
    r = np.array([20.0, 25.0, 35.0, 50.0])
    series = _series(s, i, r, n=1000.0)
    inc = to_increments(series)
    kb, cb, kg, cg = term_constants(series, inc, mean_lag=1)
    assert kb.tolist() == [20.0, 30.0, 40.0]  # daily new diagnoses, days 2..4
    assert kg.tolist() == [5.0, 10.0, 15.0]
    assert cb == pytest.approx((s[:-1] * i[:-1] / 1000.0).tolist())
    assert cg == pytest.approx(i[:-1].tolist())
    kb0, cb0, kg0, cg0 = term_constants(series, inc, mean_lag=0)
    assert cb0 == pytest.approx((s[1:] * i[1:] / 1000.0).tolist())
    assert cg0 == pytest.approx(i[1:].tolist())
    assert kb0.tolist() == kb.tolist() and kg0.tolist() == kg.tolist()


def test_term_constants_rejects_bad_lag_and_lengths():
    series = _series(s=[900.0, 880.0], i=[80.0, 95.0], r=[20.0, 25.0], n=1000.0)
    inc = to_increments(series)
    with pytest.raises(DomainError):
        term_constants(series, inc, mean_lag=2)
    short = IncrementSeries(dm=[1.0], dr=[0.0])
    with pytest.raises(ShapeError):
        term_constants(series, short)


# ---------------------------------------------------------------- loglik / terms

def test_loglik_is_sum_of_naive_per_term_evaluations():
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = int(rng.integers(3, 40))
        series, inc, path = _random_instance(rng, t)
        kb, cb, kg, cg = term_constants(series, inc)
        naive = float(
            np.sum(sp_poisson.logpmf(kb.astype(int), path.beta[1:] * cb))
            + np.sum(sp_poisson.logpmf(kg.astype(int), path.gamma[1:] * cg))
        )
        assert loglik(path, series, inc) == pytest.approx(naive, rel=1e-10, abs=1e-8)


def test_loglik_terms_shapes_and_sum():
    rng = np.random.default_rng(3)
    series, inc, path = _random_instance(rng, 12)
    bt, gt = loglik_terms(path, series, inc)
    assert bt.shape == gt.shape == (11,)
    assert loglik(path, series, inc) == pytest.approx(float(bt.sum() + gt.sum()))


def test_loglik_validates_path():
    rng = np.random.default_rng(5)
    series, inc, path = _random_instance(rng, 6)
    with pytest.raises(ShapeError):
        loglik(RatePath(beta=np.ones(5), gamma=np.ones(5)), series, inc)
    bad = RatePath(beta=np.array([0.1, -0.2, 0.1, 0.1, 0.1, 0.1]), gamma=np.ones(6))
    with pytest.raises(DomainError):
        loglik(bad, series, inc)


def test_permuting_days_jointly_leaves_loglik_unchanged():
    rng = np.random.default_rng(11)
    series, inc, path = _random_instance(rng, 10)
    base = loglik(path, series, inc)
    perm = rng.permutation(9)  # reorder the 9 likelihood terms (days 2..10)
    s2, i2, r2 = series.s.copy(), series.i.copy(), series.r.copy()
    s2[:-1], i2[:-1], r2[:-1] = series.s[perm], series.i[perm], series.r[perm]
    series2 = _series(s2, i2, r2, series.n)
    inc2 = IncrementSeries(
        dm=np.concatenate([[inc.dm[0]], inc.dm[1:][perm]]),
        dr=np.concatenate([[inc.dr[0]], inc.dr[1:][perm]]),
    )
    path2 = RatePath(
        beta=np.concatenate([[path.beta[0]], path.beta[1:][perm]]),
        gamma=np.concatenate([[path.gamma[0]], path.gamma[1:][perm]]),
    )
    assert loglik(path2, series2, inc2) == pytest.approx(base, rel=1e-12)


def test_loglik_concave_in_each_single_rate():
    rng = np.random.default_rng(13)
    series, inc, path = _random_instance(rng, 8)
    h = 1e-3
    for t in range(2, 9):
        for which in ("beta", "gamma"):
            vec = getattr(path, which)
            x = vec[t - 1]
            f = []
            for shift in (-h, 0.0, h):
                v2 = vec.copy()
                v2[t - 1] = x + shift
                p2 = RatePath(beta=v2, gamma=path.gamma) if which == "beta" else RatePath(
                    beta=path.beta, gamma=v2
                )
                f.append(loglik(p2, series, inc))
            assert f[0] - 2 * f[1] + f[2] <= 0.0


# ---------------------------------------------------------------- term deltas

def test_delta_noop_is_zero():
    rng = np.random.default_rng(17)
    series, inc, path = _random_instance(rng, 7)
    assert loglik_term_delta(path, series, inc, 4, "beta", float(path.beta[3])) == 0.0


def test_delta_to_zero_rate_with_positive_count():
    rng = np.random.default_rng(19)
    series, inc, path = _random_instance(rng, 7)
    t = 1 + int(np.argmax(inc.dr[1:] > 0)) + 1
    assert inc.dr[t - 1] > 0
    assert loglik_term_delta(path, series, inc, t, "gamma", 0.0) == -np.inf


def test_delta_leaving_zero_rate_with_positive_count():
    rng = np.random.default_rng(23)
    series, inc, path = _random_instance(rng, 7)
    gamma = path.gamma.copy()
    gamma[3] = 0.0
    stuck = RatePath(beta=path.beta, gamma=gamma)
    if inc.dr[3] > 0:
        assert loglik_term_delta(stuck, series, inc, 4, "gamma", 0.5) == np.inf


def test_delta_validation():
    rng = np.random.default_rng(29)
    series, inc, path = _random_instance(rng, 6)
    with pytest.raises(DomainError):
        loglik_term_delta(path, series, inc, 1, "beta", 0.5)
    with pytest.raises(DomainError):
        loglik_term_delta(path, series, inc, 7, "beta", 0.5)
    with pytest.raises(DomainError):
        loglik_term_delta(path, series, inc, 3, "beta", -0.5)
    with pytest.raises(DomainError):
        loglik_term_delta(path, series, inc, 3, "delta", 0.5)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    t_day=st.integers(2, 9),
    which=st.sampled_from(["beta", "gamma"]),
    new_value=st.floats(0.0, 5.0, allow_nan=False),
)
def test_delta_matches_full_recompute(seed, t_day, which, new_value):
    rng = np.random.default_rng(seed)
    series, inc, path = _random_instance(rng, 9)
    before = loglik(path, series, inc)
    vec = getattr(path, which).copy()
    vec[t_day - 1] = new_value
    after_path = (
        RatePath(beta=vec, gamma=path.gamma)
        if which == "beta"
        else RatePath(beta=path.beta, gamma=vec)
    )
    after = loglik(after_path, series, inc)
    delta = loglik_term_delta(path, series, inc, t_day, which, new_value)
    assert delta == pytest.approx(after - before, abs=1e-10)
