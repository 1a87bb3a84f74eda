import functools
import math

import numpy as np
import pytest

from chebdde.discretize import make_system, replicate
from chebdde.errors import (
    EvalDomainError,
    IntegrationError,
    NoJumpError,
    NotPeriodicError,
    PeriodEstimateError,
    UnknownSymbolError,
)
from chebdde.model import blowflies, fluidflow, make_model
from chebdde.simulate import (
    Trajectory,
    bracket_period_doubling,
    estimate_period,
    integrate,
    period_report,
    sample_history,
)


@functools.cache
def blowflies_run():
    """Shared attractor run at (mu, beta) = (7, 105), n = 20."""
    ps = make_system(blowflies(7.0, 105.0), 20)
    y0 = replicate(ps.equilibrium, 20)
    y0 += 0.2 * (1.0 + np.abs(y0))
    return ps, y0, integrate(ps, y0, 200.0, rel_tol=1e-7, abs_tol=1e-9)


def synthetic(x, t):
    return Trajectory(t, x[:, None], np.zeros_like(t))


def test_sample_history_constant():
    ps = make_system(blowflies(3.0, 25.0), 6)
    assert np.array_equal(sample_history(ps, lambda th: 1.3), np.full(7, 1.3))
    ps2 = make_system(fluidflow(12.0, 1.5), 4)
    s = sample_history(ps2, lambda th: np.array([0.2, 2.0]))
    assert np.array_equal(s, np.tile([0.2, 2.0], 5))


def test_sample_history_node_coordinates():
    ps = make_system(blowflies(3.0, 25.0), 8)
    assert np.array_equal(sample_history(ps, lambda th: th), ps.mesh.nodes)


def test_sample_history_critical_pair_samples():
    w = 2.3
    ps = make_system(blowflies(3.0, 25.0), 8)
    s = sample_history(ps, lambda th: np.cos(w * th))
    assert np.array_equal(s, np.cos(w * ps.mesh.nodes))


def test_sample_history_failure():
    ps = make_system(blowflies(3.0, 25.0), 5)
    with pytest.raises(EvalDomainError):
        sample_history(ps, lambda th: math.sqrt(th))  # negative nodes
    with pytest.raises(EvalDomainError):
        sample_history(ps, lambda th: math.inf)


def test_integrate_equilibrium_stays_put():
    ps = make_system(blowflies(3.0, 25.0), 10)
    y0 = replicate(ps.equilibrium, 10)
    traj = integrate(ps, y0, 100.0, rel_tol=1e-10, abs_tol=1e-12)
    assert np.max(np.abs(traj.states - y0)) < 1e-8


def test_integrate_matches_exponential_decay():
    m = make_model(1, (0.0, 1.0), ("-x0@0",), {}, equilibrium_hint=[0.0])
    ps = make_system(m, 6)
    traj = integrate(ps, sample_history(ps, lambda th: 1.0), 5.0,
                     rel_tol=1e-9, abs_tol=1e-12)
    assert np.max(np.abs(traj.states[:, 0] - np.exp(-traj.times))) < 1e-10


def test_integrate_validation():
    ps = make_system(blowflies(3.0, 25.0), 4)
    y0 = replicate(ps.equilibrium, 4)
    with pytest.raises(ValueError):
        integrate(ps, y0, 10.0, rel_tol=1e-13)
    with pytest.raises(ValueError):
        integrate(ps, y0, 10.0, abs_tol=0.1)
    with pytest.raises(ValueError):
        integrate(ps, y0, 0.0)
    with pytest.raises(ValueError):
        integrate(ps, y0[:-1], 10.0)


def test_integrate_blowup_aborts_with_partial_trajectory():
    # x' = x^2 from x = 2 blows up at t = 1/2
    m = make_model(1, (0.0, 1.0), ("x0@0^2",), {}, equilibrium_hint=[0.0])
    ps = make_system(m, 4, equilibrium=[0.0])
    with pytest.raises(IntegrationError) as err:
        integrate(ps, replicate(np.array([2.0]), 4), 10.0)
    traj = err.value.trajectory
    assert traj is not None
    assert 0.49 < traj.times[-1] < 0.6
    assert np.all(np.isfinite(traj.states))
    assert err.value.payload()["error"] == "integration_failure"


def test_trajectory_fields_consistent():
    _, y0, traj = blowflies_run()
    assert np.all(np.diff(traj.times) > 0.0)
    assert np.all(np.isfinite(traj.states))
    assert traj.times.shape[0] == traj.states.shape[0] == traj.errors.shape[0]
    assert traj.errors[0] == 0.0
    assert np.all(traj.errors <= 1.0)
    assert np.array_equal(traj.component(0), traj.states[:, 0])


def test_blowflies_attractor_bounded_oscillatory():
    _, _, traj = blowflies_run()
    tail = traj.states[traj.times >= 120.0, 0]
    assert 0.0 < tail.min() and tail.max() < 10.0
    assert tail.max() - tail.min() > 3.0


def test_estimate_period_synthetic_sine():
    T = 3.7
    t = np.linspace(0.0, 40 * T, 8000)
    p = estimate_period(synthetic(np.sin(2 * np.pi * t / T), t), 0, 0.1)
    assert abs(p - T) / T < 1e-6


def test_estimate_period_blowflies_doubled_orbit():
    # both humps of the doubled orbit cross the mean level, so the cycle
    # classifier must return the full period, not the bare crossing spacing
    _, _, traj = blowflies_run()
    rep = period_report(traj)
    assert abs(rep["period"] - 4.47) / 4.47 < 0.05
    assert rep["spread"] < 0.01
    assert rep["crossings"] >= 20


def test_estimate_period_quasiperiodic_flagged():
    t = np.linspace(0.0, 150.0, 8000)
    x = np.sin(2 * np.pi * t / 3.0) + 0.8 * np.sin(2.0 * t)
    with pytest.raises(NotPeriodicError):
        estimate_period(synthetic(x, t), 0, 0.1)


def test_estimate_period_not_oscillatory():
    t = np.linspace(0.0, 100.0, 2000)
    with pytest.raises(PeriodEstimateError):
        estimate_period(synthetic(t.copy(), t), 0, 0.1)  # monotone
    with pytest.raises(PeriodEstimateError):
        estimate_period(synthetic(np.full_like(t, 2.0), t), 0, 0.1)  # flat


def test_estimate_period_skip_validation():
    t = np.linspace(0.0, 10.0, 100)
    traj = synthetic(np.sin(t), t)
    with pytest.raises(ValueError):
        estimate_period(traj, 0, 1.0)
    with pytest.raises(ValueError):
        estimate_period(traj, 0, -0.1)


def test_period_same_in_every_component():
    _, _, traj = blowflies_run()
    periods = [estimate_period(traj, c) for c in (0, 7, 20)]
    for p in periods[1:]:
        assert abs(p - periods[0]) / periods[0] < 1e-3


def test_period_independent_of_tolerance():
    ps, y0, traj = blowflies_run()
    p1 = estimate_period(traj)
    p2 = estimate_period(integrate(ps, y0, 200.0, rel_tol=5e-8, abs_tol=5e-10))
    assert abs(p1 - p2) / p1 < 1e-3


def test_transport_relaxes_to_head_value():
    # rhs 0 pins y_0; the differentiation rows pull the tail to the constant
    m = make_model(1, (0.0, 1.0), ("0",), {}, equilibrium_hint=[0.7])
    ps = make_system(m, 8, equilibrium=[0.7])
    y0 = sample_history(ps, lambda th: 0.7 + th * np.sin(3.0 * th))
    traj = integrate(ps, y0, 50.0, rel_tol=1e-10, abs_tol=1e-12)
    assert np.array_equal(traj.states[:, 0], np.full(len(traj.times), y0[0]))
    assert np.max(np.abs(traj.states[-1] - y0[0])) < 1e-8


def test_fluidflow_equilibrium_attracts_at_unit_coupling():
    # at (k, c) = (1.5, 1.5) the characteristic function only touches the
    # axis tangentially on k c^2 = 2 pi^2, so the equilibrium is stable and
    # generic kicks decay; there is no reachable oscillatory attractor
    ps = make_system(fluidflow(1.5, 1.5), 20)
    y0 = replicate(ps.equilibrium, 20)
    y0 += 0.5 * (1.0 + np.abs(y0))
    traj = integrate(ps, y0, 200.0, rel_tol=1e-7, abs_tol=1e-9)
    assert np.max(np.abs(traj.states[-1] - replicate(ps.equilibrium, 20))) < 1e-4
    with pytest.raises(PeriodEstimateError):
        estimate_period(traj)


def test_fluidflow_band_orbit():
    # the discretized grazing root does cross for k c^2 somewhat beyond
    # 2 pi^2, giving a genuine stable orbit with period near 2 pi / pi = 2
    ps = make_system(fluidflow(12.0, 1.5), 20)
    y0 = replicate(np.array([0.2, 2.0]), 20)
    traj = integrate(ps, y0, 300.0, rel_tol=1e-7, abs_tol=1e-9)
    rep = period_report(traj)
    assert 1.85 < rep["period"] < 1.97
    assert rep["spread"] < 1e-3


def test_bracket_period_doubling_blowflies():
    lo, hi = bracket_period_doubling(
        blowflies(7.0, 100.0), "beta", (90.0, 110.0), 20, tol=2.0
    )
    assert hi - lo <= 2.0
    assert lo < 98.22 < hi


def test_bracket_no_jump():
    with pytest.raises(NoJumpError):
        bracket_period_doubling(
            blowflies(7.0, 100.0), "beta", (60.0, 70.0), 20, tol=2.0
        )


def test_bracket_validation():
    m = blowflies(7.0, 100.0)
    with pytest.raises(ValueError):
        bracket_period_doubling(m, "beta", (95.0, 95.0), 20)
    with pytest.raises(UnknownSymbolError):
        bracket_period_doubling(m, "gamma", (90.0, 110.0), 20)
    with pytest.raises(ValueError):
        bracket_period_doubling(m, "beta", (90.0, 110.0), 20, tol=0.0)
