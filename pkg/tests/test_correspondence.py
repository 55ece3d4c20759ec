import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from pendulab.analytic import heteroclinic
from pendulab.core import (DomainError, PendulumParams, Trajectory,
                           euler_top_field, pendulum_energy, pendulum_field)
from pendulab.correspondence import (Axis, ConstraintViolation, LevelSurface,
                                     euler_to_pendulum, pendulum_to_euler,
                                     residual_report)
from pendulab.ode import GridSpec, integrate

H_HALF = LevelSurface(Axis.H, 0.5)


def constant(states, n=11):
    return Trajectory(np.linspace(0, 1, n), np.tile(states, (n, 1)))


@pytest.fixture(scope="module")
def swinging():
    """Pendulum h = 0.5 released at rest from -3.8 (it swings back and forth
    through the inverted position region)."""
    return integrate(pendulum_field(PendulumParams(h=0.5)), (-3.8, 0.0),
                     GridSpec(0.0, 20.0, 1e-4))


@pytest.fixture(scope="module")
def euler_run():
    return integrate(euler_top_field(), (0.1, 0.1, 0.2),
                     GridSpec(0.0, 100.0, 1e-3))


def test_level_surface_validation():
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(DomainError):
            LevelSurface(Axis.H, bad)
    assert LevelSurface("K", 1.0).axis is Axis.K


def test_equilibria_map_to_equilibria():
    rest = pendulum_to_euler(constant([0.0, 0.0]), H_HALF)
    assert_allclose(rest.states, np.tile([1.0, 0.0, 0.0], (11, 1)), atol=0)
    top = pendulum_to_euler(constant([math.pi, 0.0]), H_HALF)
    assert_allclose(top.states, np.tile([0.0, 1.0, 0.0], (11, 1)),
                    atol=1e-16)
    assert np.max(residual_report(top)) <= 1e-15


def test_k_surface_map_layout():
    x = pendulum_to_euler(constant([0.6, 1.4], n=5), LevelSurface(Axis.K, 2.0))
    r = math.sqrt(4.0)
    assert_allclose(x.states[0], (-0.7, r * math.sin(0.3), r * math.cos(0.3)))


@pytest.mark.parametrize("axis", list(Axis))
def test_pendulum_to_euler_solves_the_top(swinging, axis):
    x = pendulum_to_euler(swinging, LevelSurface(axis, 0.5))
    assert np.max(residual_report(x)) <= 1e-5


def test_k_surface_with_h_surface_layout_fails(swinging):
    """Placing cos(θ/2) on x2 and sin(θ/2) on x3 does not give a solution."""
    theta, omega = swinging.states.T
    bad = np.column_stack([-omega / 2, np.cos(theta / 2), np.sin(theta / 2)])
    assert np.max(residual_report(Trajectory(swinging.times, bad))) > 0.1


@given(st.lists(st.floats(-6, 6), min_size=20, max_size=20),
       st.floats(0.01, 10.0), st.sampled_from(list(Axis)))
@settings(max_examples=50)
def test_map_enforces_the_surface(thetas, level, axis):
    theta = np.array(thetas)
    traj = Trajectory(np.arange(20.0), np.column_stack([theta, -theta]))
    surf = LevelSurface(axis, level)
    x = pendulum_to_euler(traj, surf)
    assert np.max(np.abs(surf.deviation(x.states))) <= 1e-14 * max(1, level)


@pytest.mark.parametrize("axis, level", [(Axis.H, 0.01), (Axis.K, 0.025)])
def test_euler_to_pendulum_solves_the_pendulum(euler_run, axis, level):
    theta = euler_to_pendulum(euler_run, LevelSurface(axis, level))
    assert np.max(residual_report(theta, "pendulum", level)) <= 1e-5
    assert np.max(np.abs(np.diff(theta.states[:, 0]))) < math.pi


def test_constant_point_gives_rest():
    theta = euler_to_pendulum(constant([1.0, 0.0, 0.0]), H_HALF)
    assert_array_equal(theta.states, 0.0)


@pytest.mark.parametrize("axis", list(Axis))
def test_round_trip(swinging, axis):
    surf = LevelSurface(axis, 0.5)
    back = euler_to_pendulum(pendulum_to_euler(swinging, surf), surf)
    assert np.max(np.abs(back.states - swinging.states)) <= 1e-12


def test_round_trip_keeps_unwrapped_angle():
    t = np.linspace(0, 10, 2001)
    theta = 3.0 * t - 7.0          # many turns, negative start
    traj = Trajectory(t, np.column_stack([theta, np.full_like(t, 3.0)]))
    back = euler_to_pendulum(pendulum_to_euler(traj, H_HALF), H_HALF)
    # θ/2 is recovered on a continuous branch, θ up to a multiple of 4π
    shift = back.states[0, 0] - theta[0]
    assert shift / (4 * math.pi) == pytest.approx(round(shift / (4 * math.pi)))
    assert_allclose(back.states[:, 0] - shift, theta, atol=1e-12)


def test_off_surface_input_reports_worst_node():
    x = pendulum_to_euler(constant([0.3, 0.1]), H_HALF).states.copy()
    x[7, 0] += 0.01
    with pytest.raises(ConstraintViolation) as info:
        euler_to_pendulum(Trajectory(np.linspace(0, 1, 11), x), H_HALF)
    assert info.value.node == 7
    assert info.value.deviation == pytest.approx(0.5 * (
        (x[7, 0]) ** 2 + x[7, 1] ** 2) - 0.5)


def test_coarse_sampling_rejected():
    t = np.array([0.0, 1.0, 2.0])
    x = pendulum_to_euler(
        Trajectory(t, np.column_stack([[0.0, 3.5, 7.0], [0.0, 0.0, 0.0]])),
        H_HALF)
    with pytest.raises(DomainError):
        euler_to_pendulum(x, H_HALF)


def test_residual_of_heteroclinic():
    t = np.arange(0.0, 10.0 + 1e-12, 1e-3)
    res = residual_report(Trajectory(t, heteroclinic(0.5, t)))
    assert res.shape == (3,)
    assert np.max(res) <= 1e-6


def test_residual_of_equilibrium_is_zero():
    assert_array_equal(residual_report(constant([0.0, 2.0, 0.0])), 0.0)


def test_residual_detects_corruption():
    t = np.arange(0.0, 5.0, 1e-3)
    x = heteroclinic(0.5, t)
    x[2500, 1] += 1e-3
    assert np.max(residual_report(Trajectory(t, x))) >= 1e-2


def test_residual_arguments():
    with pytest.raises(DomainError):
        residual_report(constant([0.0, 0.0, 0.0], n=4))
    with pytest.raises(DomainError):
        residual_report(Trajectory([0, 1, 2, 4, 5], np.zeros((5, 3))))
    with pytest.raises(DomainError):
        residual_report(constant([0.0, 0.0]), "pendulum")
    with pytest.raises(DomainError):
        residual_report(constant([0.0, 0.0]), "other")


def test_energy_and_residual_monitors_agree():
    """On true pendulum motions both monitors pass; on motions with a
    perturbed rate both fail."""
    rng = np.random.default_rng(4)
    g = GridSpec(0.0, 4.0, 1e-3)
    agree = 0
    for case in range(100):
        h = rng.uniform(0.2, 1.0)
        theta0 = rng.uniform(-3.0, 3.0)
        traj = integrate(pendulum_field(PendulumParams(h=h)), (theta0, 0.0), g)
        corrupt = case % 2 == 1
        if corrupt:
            s = traj.states.copy()
            s[:, 1] *= 1.0 + rng.uniform(0.05, 0.2)
            traj = Trajectory(traj.times, s)
        x = pendulum_to_euler(traj, LevelSurface(Axis.H, h))
        residual_ok = np.max(residual_report(x)) <= 1e-5
        e = pendulum_energy(traj.states[:, 0], traj.states[:, 1], h)
        energy_ok = np.max(np.abs(e - e[0])) <= 1e-8
        agree += residual_ok == energy_ok == (not corrupt)
    assert agree == 100
