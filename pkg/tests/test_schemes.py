import math

import numpy as np
import pytest
from conftest import constant_problem

from fracmc.geometry import Ball
from fracmc.levy import make_params
from fracmc.problems import ProblemSpec, SteadyProblemSpec, build_example, reverse_time
from fracmc.rng import derive_stream
from fracmc.schemes import (
    DRIFT_EXIT,
    HORIZON,
    JUMP_EXIT,
    REASONS,
    MaxStepsExceeded,
    SchemeConfig,
    simulate_batch,
    simulate_batch_steady,
    simulate_path_scheme1,
    simulate_path_scheme2,
    simulate_path_steady,
)


def free_problem(n=2, s=0.5, T=1.0, c=0.0, radius=1e6):
    """No drift, constant potential, a domain too large to leave."""
    return ProblemSpec(
        n=n, s=s, T=T, domain=Ball(np.zeros(n), radius),
        b=lambda t, x: np.zeros_like(x), c=lambda t, x: np.full(len(x), c),
        f=lambda t, x: np.ones(len(x)), g=lambda x: np.zeros(len(x)),
        chi=lambda t, x: np.zeros(len(x)),
    )


@pytest.mark.parametrize("scheme", ["scheme1", "scheme2"])
@pytest.mark.parametrize("n", [1, 2, 7, 100])
def test_constant_data_gives_constant_payoff(scheme, n):
    p = constant_problem(n, K=2.5, s=0.6)
    out = simulate_batch(p, SchemeConfig(scheme, 0.2), 0.3, np.zeros(n), 11, np.arange(300))
    assert np.all(out.payoff == 2.5)


@pytest.mark.parametrize("scheme,sim", [("scheme1", simulate_path_scheme1), ("scheme2", simulate_path_scheme2)])
def test_batch_matches_reference_path(scheme, sim):
    ex = build_example("example2", 2, 0.5)
    cfg = SchemeConfig(scheme, 1 / 20, dt_cap=0.3)
    x0 = np.array([0.5, 0.5])
    batch = simulate_batch(ex.problem, cfg, 0.5, x0, 99, np.arange(100, 160))
    for k, j in enumerate(range(100, 160)):
        ref = sim(ex.problem, cfg, 0.5, x0, derive_stream(99, j))
        got = batch.outcome(k)
        assert got.payoff == ref.payoff
        assert got.steps == ref.steps
        assert got.stop_reason == ref.stop_reason
        assert np.array_equal(got.stop_x, ref.stop_x)


def test_batch_is_independent_of_grouping():
    ex = build_example("example1", 3, 0.5)
    cfg = SchemeConfig("scheme2", 0.1)
    x0 = np.full(3, 1 / 3)
    whole = simulate_batch(ex.problem, cfg, 0.5, x0, 5, np.arange(50))
    parts = [simulate_batch(ex.problem, cfg, 0.5, x0, 5, np.arange(a, a + 10)) for a in range(0, 50, 10)]
    assert np.array_equal(whole.payoff, np.concatenate([p.payoff for p in parts]))


def test_scheme2_with_zero_scale_equals_scheme1():
    ex = build_example("example2", 2, 0.5)
    x0 = np.array([0.3, -0.2])
    a = simulate_batch(ex.problem, SchemeConfig("scheme1", 0.05), 0.2, x0, 3, np.arange(200))
    b = simulate_batch(ex.problem, SchemeConfig("scheme2", 0.05, sigma_override=0.0), 0.2, x0, 3, np.arange(200))
    assert np.array_equal(a.payoff, b.payoff)
    assert np.array_equal(a.steps, b.steps)


def test_step_count_is_one_plus_poisson():
    s, eps, T, t0 = 0.5, 0.1, 1.0, 0.25
    lam = make_params(2, s, eps).lambda_eps * (T - t0)
    out = simulate_batch(free_problem(s=s, T=T), SchemeConfig("scheme1", eps), t0, np.zeros(2), 1, np.arange(20000))
    k = out.steps - 1
    se = math.sqrt(lam / k.size)
    assert abs(k.mean() - lam) < 4 * se
    assert k.var() == pytest.approx(lam, rel=0.05)
    assert np.all(out.reason == REASONS.index(HORIZON))
    # f = 1 and c = 0: Z accumulates exactly the elapsed time
    assert np.allclose(out.z, T - t0, rtol=0, atol=1e-12)


def test_dt_cap_forces_steps_without_jumps():
    cfg = SchemeConfig("scheme1", 0.9, dt_cap=0.01)
    out = simulate_batch(free_problem(s=0.9), cfg, 0.0, np.zeros(2), 2, np.arange(200))
    assert out.steps.min() >= 100
    assert np.allclose(out.stop_time, 1.0)


@pytest.mark.parametrize("c", [-2.0, 1.5])
def test_y_bound(c):
    out = simulate_batch(free_problem(c=c), SchemeConfig("scheme1", 0.3), 0.0, np.zeros(2), 4, np.arange(2000))
    assert np.all(out.y > 0) if c > -1 else True
    assert np.all(np.abs(out.y) <= math.exp(abs(c) * 1.0) + 1e-12)


@pytest.mark.parametrize("scheme", ["scheme1", "scheme2"])
def test_stopped_states(scheme):
    ex = build_example("example2", 3, 0.75)
    out = simulate_batch(ex.problem, SchemeConfig(scheme, 1 / 16), 0.5, np.full(3, 1 / 3), 8, np.arange(3000))
    exited = out.reason != REASONS.index(HORIZON)
    assert exited.any() and (~exited).any()
    assert not ex.problem.domain.inside(out.stop_x[exited]).any()
    assert ex.problem.domain.inside(out.stop_x[~exited]).all()
    assert np.allclose(out.stop_time[~exited], ex.problem.T)
    assert np.all(out.stop_time[exited] <= ex.problem.T)
    if scheme == "scheme1":
        # without drift or small-jump motion the path cannot leave between jumps
        ex1 = build_example("example1", 3, 0.75)
        o1 = simulate_batch(ex1.problem, SchemeConfig(scheme, 1 / 16), 0.5, np.full(3, 1 / 3), 8, np.arange(3000))
        assert not np.any(o1.reason == REASONS.index(DRIFT_EXIT))
        assert np.any(o1.reason == REASONS.index(JUMP_EXIT))


def test_max_steps_reports_path_index():
    cfg = SchemeConfig("scheme1", 0.01, max_steps=3)
    with pytest.raises(MaxStepsExceeded) as info:
        simulate_batch(free_problem(), cfg, 0.0, np.zeros(2), 1, np.arange(7, 10))
    assert info.value.path_index == 7
    with pytest.raises(MaxStepsExceeded):
        simulate_path_scheme1(free_problem(), cfg, 0.0, np.zeros(2), derive_stream(1, 0))


def test_input_validation():
    p = build_example("example1", 2, 0.5).problem
    with pytest.raises(ValueError):
        simulate_batch(p, SchemeConfig(), 0.0, np.array([1.0, 0.0]), 1, [0])
    with pytest.raises(ValueError):
        simulate_batch(p, SchemeConfig(), 1.0, np.zeros(2), 1, [0])
    with pytest.raises(ValueError):
        simulate_batch(reverse_time(p), SchemeConfig(), 0.0, np.zeros(2), 1, [0])
    for bad in (dict(scheme="scheme3"), dict(eps=1.0), dict(dt_cap=0.0), dict(max_steps=0),
                dict(sigma_override=-1.0)):
        with pytest.raises(ValueError):
            SchemeConfig(**bad)


def steady_exit_time_problem(n=2, s=0.5):
    return SteadyProblemSpec(
        n=n, s=s, domain=Ball.unit(n),
        b=lambda x: np.zeros_like(x), c=lambda x: np.zeros(len(x)),
        f=lambda x: np.ones(len(x)), g=lambda x: np.zeros(len(x)),
    )


def test_steady_payoff_is_exit_time():
    p = steady_exit_time_problem()
    cfg = SchemeConfig("scheme1", 0.1)
    out = simulate_batch_steady(p, cfg, np.zeros(2), 3, np.arange(40))
    assert np.allclose(out.payoff, out.stop_time)
    assert not p.domain.inside(out.stop_x).any()
    ref = simulate_path_steady(p, cfg, np.zeros(2), derive_stream(3, 5))
    assert ref.payoff == out.payoff[5]


def test_steady_mean_exit_time_close_to_closed_form():
    # E tau_0 = Gamma(n/2) / (4^s Gamma(1+s) Gamma(n/2+s)) for the unit ball
    n, s = 2, 0.5
    p = steady_exit_time_problem(n, s)
    out = simulate_batch_steady(p, SchemeConfig("scheme1", 1 / 80), np.zeros(n), 1, np.arange(20000))
    exact = math.gamma(n / 2) / (4**s * math.gamma(1 + s) * math.gamma(n / 2 + s))
    se = out.payoff.std() / math.sqrt(out.payoff.size)
    # the truncated process leaves later; allow the bias on top of 4 standard errors
    assert abs(out.payoff.mean() - exact) < 4 * se + 0.03
