"""Tests for the three synthetic-epidemic generators."""
import numpy as np
import pytest

from tfsir.errors import ConfigError, DomainError, ShapeError
from tfsir.simulate import (
    RateSchedule,
    SimConfig,
    simulate,
    simulate_poisson,
    simulate_ssa,
    solve_ode,
)
from tfsir.study import builtin_designs

# Day-80 state of the deterministic Design-1 trajectory, recorded from a
# step-0.001 integration; the default step 0.01 must agree closely.
DESIGN1_DAY80 = (973776.1118363602, 3072.995670880789, 23150.89249276249)


def design1():
    return builtin_designs()[0].schedule


def test_schedule_piecewise_lookup():
    sched = RateSchedule(breakpoints=(21, 41), beta_values=(0.1, 0.2, 0.3),
                         gamma_values=(0.05, 0.06, 0.07))
    assert sched.beta_at(1) == 0.1
    assert sched.beta_at(20) == 0.1
    assert sched.beta_at(21) == 0.2
    assert sched.beta_at(40) == 0.2
    assert sched.beta_at(41) == 0.3
    assert sched.gamma_at(80) == 0.07
    assert sched.beta_path(42)[40] == 0.3


def test_schedule_validation():
    with pytest.raises(ShapeError):
        RateSchedule(breakpoints=(21,), beta_values=(0.1,), gamma_values=(0.05, 0.06))
    with pytest.raises(DomainError):
        RateSchedule(breakpoints=(21, 21), beta_values=(0.1, 0.2, 0.3),
                     gamma_values=(0.05, 0.06, 0.07))
    with pytest.raises(DomainError):
        RateSchedule(breakpoints=(1,), beta_values=(0.1, 0.2), gamma_values=(0.05, 0.06))
    with pytest.raises(DomainError):
        RateSchedule(breakpoints=(), beta_values=(-0.1,), gamma_values=(0.05,))


def test_simconfig_validation():
    with pytest.raises(ConfigError):
        SimConfig(n=100.0, horizon=1)
    with pytest.raises(ConfigError):
        SimConfig(n=100.0, i0=90.0, r0=20.0)
    with pytest.raises(ConfigError):
        SimConfig(n=100.0, mode="exact")


def test_simulate_dispatches_on_mode():
    sched = RateSchedule.constant(0.1, 0.05)
    for mode, func in (
        ("poisson-increment", simulate_poisson),
        ("ssa", simulate_ssa),
        ("ode", solve_ode),
    ):
        cfg = SimConfig(n=10_000.0, i0=50, horizon=12, seed=5, mode=mode)
        direct = func(sched, cfg)
        via_mode = simulate(sched, cfg)
        assert np.array_equal(direct.i, via_mode.i)


def test_poisson_zero_rates_freeze_everything():
    series = simulate_poisson(RateSchedule.constant(0.0, 0.0),
                              SimConfig(n=1000.0, i0=10, r0=5, horizon=20, seed=3))
    assert np.all(series.s == 985.0)
    assert np.all(series.i == 10.0)
    assert np.all(series.r == 5.0)


def test_poisson_no_infection_without_seed_cases():
    series = simulate_poisson(RateSchedule.constant(0.9, 0.0),
                              SimConfig(n=1000.0, i0=0, r0=0, horizon=20, seed=3))
    assert np.all(series.i == 0.0)
    assert np.all(series.s == 1000.0)


def test_poisson_design1_grows_then_wanes():
    series = simulate_poisson(design1(), SimConfig(n=1e6, i0=100, horizon=80, seed=11))
    peak = series.i.argmax()
    assert series.i[peak] > 10 * series.i[0]
    assert 20 < peak < 60
    assert series.i[-1] < series.i[peak] / 2


def test_poisson_conservation_and_monotonicity():
    for seed in range(5):
        series = simulate_poisson(design1(), SimConfig(n=1e6, i0=100, horizon=80, seed=seed))
        assert np.all(series.s + series.i + series.r == 1e6)
        assert np.all(np.diff(series.s) <= 0)
        assert np.all(np.diff(series.r) >= 0)


def test_poisson_seed_determinism():
    cfg = SimConfig(n=1e6, i0=100, horizon=80, seed=42)
    a = simulate_poisson(design1(), cfg)
    b = simulate_poisson(design1(), cfg)
    assert a.s.tobytes() == b.s.tobytes()
    assert a.i.tobytes() == b.i.tobytes()
    assert a.r.tobytes() == b.r.tobytes()


def test_poisson_clamping_reported():
    sched = RateSchedule.constant(10.0, 0.0)
    with pytest.warns(RuntimeWarning, match="clamped"):
        series = simulate_poisson(sched, SimConfig(n=50.0, i0=25, horizon=10, seed=0))
    assert np.all(series.s + series.i + series.r == 50.0)
    assert np.all(series.s >= 0)


def test_ssa_no_removal_reaction():
    series = simulate_ssa(RateSchedule.constant(0.3, 0.0),
                          SimConfig(n=500.0, i0=10, r0=4, horizon=15, seed=2))
    assert np.all(series.r == 4.0)


def test_ssa_pure_decay_without_susceptibles():
    series = simulate_ssa(RateSchedule.constant(0.5, 0.2),
                          SimConfig(n=10.0, i0=10, horizon=25, seed=9))
    assert np.all(series.s == 0.0)
    assert np.all(np.diff(series.i) <= 0)
    assert series.i[-1] + series.r[-1] == 10.0


def test_ssa_conservation_and_monotonicity():
    for seed in range(5):
        series = simulate_ssa(design1(), SimConfig(n=50_000.0, i0=100, horizon=40, seed=seed))
        assert np.all(series.s + series.i + series.r == 50_000.0)
        assert np.all(np.diff(series.s) <= 0)
        assert np.all(np.diff(series.r) >= 0)


def test_ssa_seed_determinism():
    cfg = SimConfig(n=20_000.0, i0=100, horizon=30, seed=7)
    a = simulate_ssa(design1(), cfg)
    b = simulate_ssa(design1(), cfg)
    assert a.i.tobytes() == b.i.tobytes()


def test_ssa_mean_final_size_matches_ode():
    design = builtin_designs()[2]
    finals = [
        simulate_ssa(design.schedule,
                     SimConfig(n=design.population, i0=100, horizon=80, seed=seed)).r[-1]
        for seed in range(100)
    ]
    ode = solve_ode(design.schedule,
                    SimConfig(n=design.population, i0=100, horizon=80))
    assert np.mean(finals) == pytest.approx(ode.r[-1], rel=0.05)


def test_ode_exponential_decay_closed_form():
    gamma = 0.17
    series = solve_ode(RateSchedule.constant(0.0, gamma),
                       SimConfig(n=5000.0, i0=200, horizon=30))
    days = np.arange(30)
    assert series.i == pytest.approx(200 * np.exp(-gamma * days), rel=1e-9)
    assert np.all(series.s == series.s[0])


def test_ode_all_zero_rates_constant():
    series = solve_ode(RateSchedule.constant(0.0, 0.0),
                       SimConfig(n=5000.0, i0=200, r0=30, horizon=10))
    assert np.all(series.i == 200.0)
    assert np.all(series.r == 30.0)


def test_ode_design1_golden_day80():
    series = solve_ode(design1(), SimConfig(n=1e6, i0=100, horizon=80))
    s_ref, i_ref, r_ref = DESIGN1_DAY80
    assert series.s[-1] == pytest.approx(s_ref, rel=1e-4)
    assert series.i[-1] == pytest.approx(i_ref, rel=1e-4)
    assert series.r[-1] == pytest.approx(r_ref, rel=1e-4)


def test_ode_conservation_tolerance():
    series = solve_ode(design1(), SimConfig(n=1e6, i0=100, horizon=80))
    assert np.abs(series.s + series.i + series.r - 1e6).max() <= 1e-6 * 1e6


def test_ode_step_validation():
    with pytest.raises(DomainError):
        solve_ode(design1(), SimConfig(n=1e6, horizon=10), step=0.0)
    with pytest.raises(DomainError):
        solve_ode(design1(), SimConfig(n=1e6, horizon=10), step=2.0)


def test_poisson_means_track_ode_trajectory():
    # Small rates keep the one-day discretization bias far below the
    # Monte-Carlo resolution of 200 runs; the seed block is fixed.
    sched = RateSchedule.constant(0.02, 0.01)
    ode_i = solve_ode(sched, SimConfig(n=1e6, i0=1000, horizon=30)).i
    runs = np.vstack([
        simulate_poisson(sched, SimConfig(n=1e6, i0=1000, horizon=30, seed=seed)).i
        for seed in range(200)
    ])
    mean_i = runs.mean(axis=0)
    se = runs.std(axis=0, ddof=1) / np.sqrt(200)
    z = np.abs(mean_i[1:] - ode_i[1:]) / se[1:]
    assert z.max() < 3.0
