import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etsddp.car import BOX_LOWER, BOX_UPPER, CarParams, CarPointModel, huber, \
    huber_grad, huber_hess, jacobian_oracle, stage_cost, step, step_jacobians, \
    step_jacobians_many, step_many, terminal_cost
from etsddp.findiff import central_gradient, relative_error

PARAMS = CarParams()


def random_car_points(rng, count):
    xs = rng.normal(scale=[3.0, 3.0, 3.0, 2.0], size=(count, 4))
    us = np.column_stack([rng.uniform(BOX_LOWER[0], BOX_UPPER[0], size=count),
                          rng.uniform(BOX_LOWER[1], BOX_UPPER[1], size=count)])
    return xs, us


# --- dynamics ------------------------------------------------------------------

def test_step_zero_velocity_fixed_point():
    x = np.array([1.0, -2.0, 0.7, 0.0])
    np.testing.assert_array_equal(step(x, np.array([0.3, 0.0]), PARAMS), x)


def test_step_straight_line():
    out = step(np.array([0.0, 0.0, 0.0, 1.0]), np.array([0.0, 1.0]), PARAMS)
    np.testing.assert_allclose(out, [0.03, 0.0, 0.0, 1.03], atol=1e-15)


def test_step_turning_reference_value():
    out = step(np.array([0.0, 0.0, 0.0, 1.0]), np.array([0.5, 0.0]), PARAMS)
    np.testing.assert_allclose(out, [0.0263791, 0.0, 0.0071916, 1.0],
                               atol=1e-6)


def test_step_asin_domain_error():
    # dt*v*sin(omega) = 0.03 * 300 * 0.479 ~ 4.3 > wheel base 2
    with pytest.raises(ValueError, match="asin"):
        step(np.array([0.0, 0.0, 0.0, 300.0]), np.array([0.5, 0.0]), PARAMS)


def test_step_many_matches_scalar(rng):
    xs, us = random_car_points(rng, 50)
    batch = step_many(xs, us, PARAMS)
    for i in range(50):
        np.testing.assert_allclose(batch[i], step(xs[i], us[i], PARAMS),
                                   atol=1e-14)


def test_jacobians_match_finite_differences(rng):
    worst = 0.0
    for _ in range(120):
        x = rng.normal(scale=[3.0, 3.0, 3.0, 2.0], size=4)
        u = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-2.0, 2.0)])
        jx, ju = step_jacobians(x, u, PARAMS)
        fx, fu = jacobian_oracle(x, u, PARAMS)
        worst = max(worst, relative_error(jx, fx), relative_error(ju, fu))
    assert worst < 1e-6


def test_jacobian_acceleration_column_constant(rng):
    xs, us = random_car_points(rng, 20)
    _, ju = step_jacobians_many(xs, us, PARAMS)
    np.testing.assert_array_equal(ju[:, :, 1],
                                  np.tile([0.0, 0.0, 0.0, PARAMS.dt], (20, 1)))


def test_jacobian_zero_velocity_structure():
    jx, ju = step_jacobians(np.array([0.0, 0.0, 0.0, 0.0]),
                            np.array([0.0, 1.0]), PARAMS)
    expected = np.eye(4)
    expected[0, 3] = PARAMS.dt
    expected[2, 3] = 0.0  # sin(omega) = 0
    np.testing.assert_allclose(jx, expected, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(omega=st.floats(-0.5, 0.5))
def test_zero_velocity_invariant_over_steering(omega):
    x = np.array([2.0, -1.0, 1.3, 0.0])
    out = step(x, np.array([omega, 0.0]), PARAMS)
    np.testing.assert_array_equal(out, x)


# --- huber penalty ----------------------------------------------------------------

def test_huber_zero():
    for mu in (0.01, 0.1, 1.0):
        assert huber(0.0, mu) == 0.0


def test_huber_perfect_square():
    assert huber(math.sqrt(3.0), 1.0) == pytest.approx(1.0, abs=1e-14)


def test_huber_reference_value():
    assert huber(10.0, 0.1) == pytest.approx(math.sqrt(100.01) - 0.1, abs=1e-12)
    assert huber(10.0, 0.1) == pytest.approx(9.90050, abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(z=st.floats(-1e6, 1e6), mu=st.floats(1e-3, 10.0))
def test_huber_bounds(z, mu):
    h = huber(z, mu)
    assert 0.0 <= h <= abs(z) + 1e-12
    assert h >= abs(z) - mu - 1e-12


def test_huber_derivatives_match_fd(rng):
    for _ in range(50):
        z = float(rng.normal() * 3)
        mu = float(abs(rng.normal()) + 0.05)
        fd = central_gradient(lambda v: float(huber(v[0], mu)),
                              np.array([z]), 1e-6)[0]
        assert huber_grad(z, mu) == pytest.approx(fd, abs=1e-8)
        fd2 = central_gradient(lambda v: float(huber_grad(v[0], mu)),
                               np.array([z]), 1e-6)[0]
        assert huber_hess(z, mu) == pytest.approx(fd2, abs=1e-6)


# --- costs ---------------------------------------------------------------------

def test_stage_cost_global_minimum():
    exp = stage_cost(np.zeros(4), np.zeros(2), PARAMS)
    assert exp.value == 0.0
    assert np.all(exp.grad_x == 0) and np.all(exp.grad_u == 0)


def test_stage_cost_control_terms():
    exp = stage_cost(np.zeros(4), np.array([0.5, 2.0]), PARAMS)
    assert exp.value == pytest.approx(0.01 * 0.25 + 0.0001 * 4.0, abs=1e-15)
    assert exp.value == pytest.approx(0.0029)
    np.testing.assert_array_equal(exp.hess_ux, np.zeros((2, 4)))


def test_stage_cost_gradients_match_fd(rng):
    worst = 0.0
    for _ in range(120):
        off = rng.normal(scale=2.0, size=4)
        u = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-2.0, 2.0)])
        exp = stage_cost(off, u, PARAMS)
        fd_x = central_gradient(lambda a: stage_cost(a, u, PARAMS).value, off,
                                1e-6)
        fd_u = central_gradient(lambda w: stage_cost(off, w, PARAMS).value, u,
                                1e-6)
        worst = max(worst, relative_error(exp.grad_x, fd_x, floor=1e-6),
                    relative_error(exp.grad_u, fd_u, floor=1e-6))
    assert worst < 1e-6


def test_terminal_cost_zero_offset():
    assert terminal_cost(np.zeros(4), PARAMS).value == 0.0


def test_terminal_cost_reference_value():
    value = terminal_cost(np.array([3.0, 3.0, 0.0, 0.0]), PARAMS).value
    assert value == pytest.approx(2.0 * (math.sqrt(9.01) - 0.1), abs=1e-12)
    assert value == pytest.approx(5.803332, abs=1e-6)


def test_terminal_cost_hessian_diagonal(rng):
    off = rng.normal(size=4)
    exp = terminal_cost(off, PARAMS)
    mus = np.array([PARAMS.mu1, PARAMS.mu2, PARAMS.mu3, PARAMS.mu4])
    np.testing.assert_allclose(exp.hess_xx, np.diag(huber_hess(off, mus)),
                               atol=1e-15)


def test_cost_nonnegative_with_zero_only_at_origin(rng):
    for _ in range(30):
        off = rng.normal(size=4)
        u = rng.normal(size=2)
        sc = stage_cost(off, u, PARAMS).value
        tc = terminal_cost(off, PARAMS).value
        assert sc >= 0.0 and tc >= 0.0
        if np.any(off[:2] != 0) or np.any(u != 0):
            assert sc > 0.0
        if np.any(off != 0):
            assert tc > 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        CarParams(wheel_base=0.0)
    with pytest.raises(ValueError):
        CarParams(q1=-0.1)
    with pytest.raises(ValueError):
        CarParams(mu3=0.0)


# --- model plumbing ----------------------------------------------------------------

def test_rollout_matches_repeated_steps(rng):
    model = CarPointModel(PARAMS)
    x0 = np.array([1.0, 1.0, 0.5, 0.0])
    us = np.column_stack([rng.uniform(-0.5, 0.5, 30), rng.uniform(-2, 2, 30)])
    xs = model.rollout(x0, us)
    x = x0
    for t in range(30):
        x = step(x, us[t], PARAMS)
        np.testing.assert_allclose(xs[t + 1], x, atol=1e-12)


def test_point_model_cost_stacks_match_per_step(rng):
    model = CarPointModel(PARAMS, target=np.array([0.5, -0.5, 0.1, 0.0]))
    us = np.column_stack([rng.uniform(-0.5, 0.5, 10), rng.uniform(-2, 2, 10)])
    xs = model.rollout(np.array([2.0, 2.0, 1.0, 0.0]), us)
    stacks = model.cost_expansions(xs, us)
    total = 0.0
    for t in range(10):
        exp = stage_cost(xs[t] - model.target, us[t], PARAMS)
        total += exp.value
        np.testing.assert_allclose(stacks.l_x[t], exp.grad_x, atol=1e-14)
        np.testing.assert_allclose(stacks.l_u[t], exp.grad_u, atol=1e-14)
        np.testing.assert_allclose(stacks.l_xx[t], exp.hess_xx, atol=1e-14)
    term = terminal_cost(xs[-1] - model.target, PARAMS)
    total += term.value
    np.testing.assert_allclose(stacks.phi_x, term.grad_x, atol=1e-14)
    assert model.trajectory_cost(xs, us) == pytest.approx(total, rel=1e-12)


def test_fd_dynamics_tensors_symmetry(rng):
    model = CarPointModel(PARAMS)
    us = np.column_stack([rng.uniform(-0.4, 0.4, 5), rng.uniform(-1, 1, 5)])
    xs = model.rollout(np.array([0.0, 0.0, 0.3, 1.0]), us)
    stacks = model.dynamics_expansions(xs, us, second_order=True)
    assert stacks.tens_xx.shape == (5, 4, 4, 4)
    # d2f_i/dx_j dx_k is symmetric in (j, k)
    np.testing.assert_allclose(stacks.tens_xx,
                               np.swapaxes(stacks.tens_xx, 2, 3), atol=1e-5)
    np.testing.assert_allclose(stacks.tens_uu,
                               np.swapaxes(stacks.tens_uu, 2, 3), atol=1e-5)
