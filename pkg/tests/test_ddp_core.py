import numpy as np
import pytest

from etsddp.boxqp import IndefiniteHessianError
from etsddp.linear import LinearQuadraticModel
from etsddp.riccati import lqr_oracle, riccati_recursion
from etsddp.solver import CostExpansion, DynamicsExpansion, SolverConfig, \
    Trajectory, ValueExpansion, backward_pass, compute_gains, forward_pass, \
    quadratize_q, solve

from conftest import random_lqr_instance


def scalar_expansions():
    # f(x,u) = x + u, L = x^2 + u^2 at (x,u) = (1,0); V_x(x1) = 2, V_xx = 2
    cost = CostExpansion(value=1.0, grad_x=np.array([2.0]),
                         hess_xx=np.array([[2.0]]), grad_u=np.array([0.0]),
                         hess_ux=np.array([[0.0]]), hess_uu=np.array([[2.0]]))
    dyn = DynamicsExpansion(next_state=np.array([1.0]),
                            jac_x=np.array([[1.0]]), jac_u=np.array([[1.0]]))
    value = ValueExpansion(v_x=np.array([2.0]), v_xx=np.array([[2.0]]))
    return cost, dyn, value


def test_quadratize_scalar_hand_values():
    q = quadratize_q(*scalar_expansions())
    np.testing.assert_allclose(q.q_x, [4.0])
    np.testing.assert_allclose(q.q_u, [2.0])
    np.testing.assert_allclose(q.q_xx, [[4.0]])
    np.testing.assert_allclose(q.q_ux, [[2.0]])
    np.testing.assert_allclose(q.q_uu, [[4.0]])


def test_quadratize_zero_inputs():
    cost = CostExpansion(value=0.0, grad_x=np.zeros(2), hess_xx=np.zeros((2, 2)),
                         grad_u=np.zeros(1), hess_ux=np.zeros((1, 2)),
                         hess_uu=np.zeros((1, 1)))
    dyn = DynamicsExpansion(next_state=np.zeros(2), jac_x=np.eye(2),
                            jac_u=np.ones((2, 1)))
    value = ValueExpansion(v_x=np.zeros(2), v_xx=np.zeros((2, 2)))
    q = quadratize_q(cost, dyn, value)
    assert np.all(q.q_x == 0) and np.all(q.q_u == 0)


def test_second_order_flag_adds_exact_tensor_terms(rng):
    n, l = 3, 2
    cost = CostExpansion(value=0.0, grad_x=rng.normal(size=n),
                         hess_xx=np.eye(n), grad_u=rng.normal(size=l),
                         hess_ux=rng.normal(size=(l, n)) * 0, hess_uu=np.eye(l))
    tens_xx = rng.normal(size=(n, n, n))
    tens_ux = rng.normal(size=(n, l, n))
    tens_uu = rng.normal(size=(n, l, l))
    dyn = DynamicsExpansion(next_state=np.zeros(n), jac_x=rng.normal(size=(n, n)),
                            jac_u=rng.normal(size=(n, l)), tens_xx=tens_xx,
                            tens_ux=tens_ux, tens_uu=tens_uu)
    vx = rng.normal(size=n)
    value = ValueExpansion(v_x=vx, v_xx=np.eye(n))
    q_gn = quadratize_q(cost, dyn, value, use_second_order=False)
    q_full = quadratize_q(cost, dyn, value, use_second_order=True)
    np.testing.assert_allclose(q_full.q_x, q_gn.q_x)
    np.testing.assert_allclose(q_full.q_u, q_gn.q_u)
    extra = np.einsum("i,ijk->jk", vx, tens_xx)
    np.testing.assert_allclose(q_full.q_xx - q_gn.q_xx,
                               0.5 * (extra + extra.T), atol=1e-12)
    np.testing.assert_allclose(q_full.q_ux - q_gn.q_ux,
                               np.einsum("i,ijk->jk", vx, tens_ux), atol=1e-12)


def test_quadratize_dimension_mismatch():
    cost, dyn, _ = scalar_expansions()
    bad_value = ValueExpansion(v_x=np.zeros(2), v_xx=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        quadratize_q(cost, dyn, bad_value)


def test_gains_scalar_hand_values():
    q = quadratize_q(*scalar_expansions())
    k, K = compute_gains(q, regularization=0.0)
    np.testing.assert_allclose(k, [-0.5])
    np.testing.assert_allclose(K, [[-0.5]])


def test_gains_zero_gradient():
    q = quadratize_q(*scalar_expansions())
    q0 = type(q)(q_x=q.q_x, q_u=np.zeros(1), q_xx=q.q_xx,
                 q_ux=np.zeros((1, 1)), q_uu=q.q_uu)
    k, K = compute_gains(q0, 0.0)
    assert np.all(k == 0) and np.all(K == 0)


def test_gains_box_clamps_and_zeroes_feedback():
    q = quadratize_q(*scalar_expansions())
    k, K = compute_gains(q, 0.0, box=(np.array([-0.25]), np.array([0.25]),
                                      np.array([0.0])))
    np.testing.assert_allclose(k, [-0.25])
    np.testing.assert_allclose(K, [[0.0]])


def test_gains_indefinite_raises():
    q = quadratize_q(*scalar_expansions())
    bad = type(q)(q_x=q.q_x, q_u=q.q_u, q_xx=q.q_xx, q_ux=q.q_ux,
                  q_uu=np.array([[-1.0]]))
    with pytest.raises(IndefiniteHessianError):
        compute_gains(bad, 0.0)


def zero_rollout_traj(model, x0, T):
    us = np.zeros((T, model.control_dim))
    return Trajectory(states=model.rollout(x0, us), controls=us)


def test_backward_scalar_lqr_gains():
    model = LinearQuadraticModel(1.0, 1.0, 1.0, 1.0, 1.0)
    traj = zero_rollout_traj(model, np.array([1.0]), 1)
    bp = backward_pass(traj, model, SolverConfig(horizon=1), regularization=0.0)
    assert bp.ok
    np.testing.assert_allclose(bp.gains.k, [[-0.5]])
    np.testing.assert_allclose(bp.gains.K, [[[-0.5]]])


def test_backward_zero_costs_zero_gains():
    model = LinearQuadraticModel(np.eye(2), np.ones((2, 1)), np.zeros((2, 2)),
                                 np.eye(1), np.zeros((2, 2)))
    traj = zero_rollout_traj(model, np.array([1.0, -2.0]), 5)
    bp = backward_pass(traj, model, SolverConfig(horizon=5), 0.0)
    assert bp.ok
    assert np.all(bp.gains.k == 0) and np.all(bp.gains.K == 0)
    v_x, v_xx = bp.values
    assert np.all(v_x == 0) and np.all(v_xx == 0)


def test_backward_matches_riccati_recursion(rng):
    A, B, Qx, Ru, Qf, T, x0 = random_lqr_instance(rng, 3, 2, 20)
    model = LinearQuadraticModel(A, B, Qx, Ru, Qf)
    traj = zero_rollout_traj(model, x0, T)
    bp = backward_pass(traj, model, SolverConfig(horizon=T), 0.0)
    assert bp.ok
    sol = riccati_recursion(A, B, Qx, Ru, Qf, T)
    np.testing.assert_allclose(bp.gains.K, -sol.gains, rtol=1e-10, atol=1e-12)
    # feedforward at the zero-control nominal equals -K_lqr @ x_nominal
    expected_k = -np.einsum("tln,tn->tl", sol.gains, traj.states[:-1])
    np.testing.assert_allclose(bp.gains.k, expected_k, rtol=1e-10, atol=1e-12)


def test_backward_value_identity_when_qux_vanishes(rng):
    # forcing f_u = 0 and l_ux = 0 makes q_ux = 0, so the value recursion
    # must return v_x = q_x and v_xx = q_xx exactly
    A = rng.normal(size=(2, 2)) * 0.5
    model = LinearQuadraticModel(A, np.zeros((2, 1)), np.eye(2),
                                 np.eye(1), np.eye(2))
    traj = zero_rollout_traj(model, np.array([1.0, 2.0]), 3)
    bp = backward_pass(traj, model, SolverConfig(horizon=3), 0.0)
    assert bp.ok
    v_x, v_xx = bp.values
    for t in (2, 1, 0):
        cost = model.cost_expansions(traj.states, traj.controls)
        dyn = model.dynamics_expansions(traj.states, traj.controls)
        q = quadratize_q(
            CostExpansion(value=0.0, grad_x=cost.l_x[t], hess_xx=cost.l_xx[t],
                          grad_u=cost.l_u[t], hess_ux=cost.l_ux[t],
                          hess_uu=cost.l_uu[t]),
            DynamicsExpansion(next_state=traj.states[t + 1],
                              jac_x=dyn.f_x[t], jac_u=dyn.f_u[t]),
            ValueExpansion(v_x=v_x[t + 1], v_xx=v_xx[t + 1]))
        np.testing.assert_array_equal(q.q_ux, np.zeros((1, 2)))
        np.testing.assert_allclose(v_x[t], q.q_x, atol=1e-14)
        np.testing.assert_allclose(v_xx[t], q.q_xx, atol=1e-14)
        assert np.max(np.abs(v_xx[t] - v_xx[t].T)) < 1e-10


def test_backward_failure_carries_step_index():
    model = LinearQuadraticModel(1.0, 1.0, 0.0, -1.0, 0.0)  # negative Ru
    traj = zero_rollout_traj(model, np.array([1.0]), 4)
    bp = backward_pass(traj, model, SolverConfig(horizon=4), 0.0)
    assert not bp.ok
    assert bp.failed_at == 3  # first failure at the last step


def test_forward_zero_gains_reproduces_trajectory():
    model = LinearQuadraticModel(0.9, 1.0, 1.0, 1.0, 1.0)
    traj = zero_rollout_traj(model, np.array([2.0]), 10)
    bp = backward_pass(traj, model, SolverConfig(horizon=10), 0.0)
    from etsddp.solver import GainSchedule
    gains = GainSchedule(k=np.zeros_like(bp.gains.k), K=bp.gains.K,
                         dv_linear=np.zeros(10), dv_quadratic=np.zeros(10))
    out = forward_pass(traj, gains, 0.7, model, SolverConfig(horizon=10))
    assert out is not None
    new_traj, cost = out
    np.testing.assert_array_equal(new_traj.states, traj.states)
    np.testing.assert_array_equal(new_traj.controls, traj.controls)
    assert cost == model.trajectory_cost(traj.states, traj.controls)


def test_forward_scalar_lqr_full_step():
    model = LinearQuadraticModel(1.0, 1.0, 1.0, 1.0, 1.0)
    traj = zero_rollout_traj(model, np.array([1.0]), 1)
    bp = backward_pass(traj, model, SolverConfig(horizon=1), 0.0)
    new_traj, cost = forward_pass(traj, bp.gains, 1.0, model,
                                  SolverConfig(horizon=1))
    np.testing.assert_allclose(new_traj.controls, [[-0.5]])
    np.testing.assert_allclose(new_traj.states, [[1.0], [0.5]])
    assert cost == pytest.approx(1.5, abs=1e-12)


def test_forward_step_scales_feedforward():
    model = LinearQuadraticModel(1.0, 1.0, 1.0, 1.0, 1.0)
    traj = zero_rollout_traj(model, np.array([1.0]), 1)
    bp = backward_pass(traj, model, SolverConfig(horizon=1), 0.0)
    new_traj, _ = forward_pass(traj, bp.gains, 0.5, model,
                               SolverConfig(horizon=1))
    np.testing.assert_allclose(new_traj.controls, [[-0.25]])


def test_solve_fixed_point_converges_first_iteration():
    model = LinearQuadraticModel(1.0, 1.0, 1.0, 1.0, 1.0)
    report = solve(np.array([0.0]), model, SolverConfig(horizon=5))
    assert report.converged
    assert report.iterations == 1
    assert report.final_cost == 0.0


def test_solve_matches_lqr_oracle(rng):
    for _ in range(10):
        n = int(rng.integers(1, 5))
        l = int(rng.integers(1, 3))
        T = int(rng.integers(3, 51))
        A, B, Qx, Ru, Qf, T, x0 = random_lqr_instance(rng, n, l, T)
        _, _, opt_cost = lqr_oracle(A, B, Qx, Ru, Qf, T, x0)
        model = LinearQuadraticModel(A, B, Qx, Ru, Qf)
        report = solve(x0, model, SolverConfig(horizon=T))
        assert report.converged
        assert abs(report.final_cost - opt_cost) < 1e-8


def test_solve_cost_history_nonincreasing(rng):
    A, B, Qx, Ru, Qf, T, x0 = random_lqr_instance(rng, 3, 2, 25)
    model = LinearQuadraticModel(A, B, Qx, Ru, Qf)
    report = solve(x0, model, SolverConfig(horizon=T))
    diffs = np.diff(report.cost_history)
    assert np.all(diffs <= 1e-12)
    assert report.iterations <= SolverConfig(horizon=T).max_iterations


def test_solve_second_order_flag_matches_on_linear_problem(rng):
    A, B, Qx, Ru, Qf, T, x0 = random_lqr_instance(rng, 2, 1, 10)
    model = LinearQuadraticModel(A, B, Qx, Ru, Qf)
    r1 = solve(x0, model, SolverConfig(horizon=T))
    r2 = solve(x0, model, SolverConfig(horizon=T, use_second_order_dynamics=True))
    assert abs(r1.final_cost - r2.final_cost) < 1e-10


def test_solve_never_raises_on_failure():
    # objective unbounded below in u: the loop must exhaust max_iterations
    # and report non-convergence instead of raising
    from etsddp.solver import CostStacks, DynamicsStacks, ModelBase

    class SinkModel(ModelBase):
        state_dim = 1
        control_dim = 1

        def step(self, x, u):
            return x + u

        def trajectory_cost(self, xs, us):
            return float(np.sum(us - np.square(us)))

        def cost_expansions(self, xs, us):
            T = us.shape[0]
            return CostStacks(l_x=np.zeros((T, 1)), l_u=1.0 - 2.0 * us,
                              l_xx=np.zeros((T, 1, 1)), l_ux=np.zeros((T, 1, 1)),
                              l_uu=np.full((T, 1, 1), -2.0),
                              phi_x=np.zeros(1), phi_xx=np.zeros((1, 1)))

        def dynamics_expansions(self, xs, us, second_order=False):
            T = us.shape[0]
            return DynamicsStacks(f_x=np.ones((T, 1, 1)), f_u=np.ones((T, 1, 1)))

    report = solve(np.array([1.0]), SinkModel(), SolverConfig(horizon=3,
                                                              max_iterations=5))
    assert not report.converged
    assert report.iterations == 5


def test_lqr_oracle_hand_example():
    xs, us, cost = lqr_oracle(1.0, 1.0, 1.0, 1.0, 1.0, 1, 1.0)
    np.testing.assert_allclose(us, [[-0.5]])
    assert cost == pytest.approx(1.5)


def test_lqr_oracle_zero_cost_and_zero_state():
    _, us, cost = lqr_oracle(1.0, 1.0, 0.0, 1.0, 0.0, 5, 1.0)
    assert np.all(us == 0) and cost == 0.0
    _, us, cost = lqr_oracle(1.0, 1.0, 1.0, 1.0, 1.0, 5, 0.0)
    assert np.all(us == 0) and cost == 0.0


def test_lqr_oracle_singular_ru_raises():
    with pytest.raises(np.linalg.LinAlgError):
        lqr_oracle(1.0, 1.0, 1.0, 0.0, 1.0, 3, 1.0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(states=np.zeros((3, 2)), controls=np.zeros((3, 1)))
    with pytest.raises(ValueError):
        Trajectory(states=np.array([[np.inf, 0.0], [0.0, 0.0]]),
                   controls=np.zeros((1, 1)))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(horizon=0)
    with pytest.raises(ValueError):
        SolverConfig(horizon=1, cost_tolerance=0.0)
    with pytest.raises(ValueError):
        SolverConfig(horizon=1, line_search_steps=(0.5, 0.1))
    with pytest.raises(ValueError):
        SolverConfig(horizon=1, control_lower=np.array([1.0]),
                     control_upper=np.array([-1.0]))
