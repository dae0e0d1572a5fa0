"""Generic DDP/iLQR solver for discrete-time trajectory optimization.

The solver alternates a backward pass (local quadratic models of the
Q-function, feedforward/feedback gains, value recursion) with a forward
rollout under a backtracking line search, adapting a Levenberg-Marquardt
regularization on the control Hessian.  Second-order dynamics tensors are
supported behind a flag; the default drops them (Gauss-Newton / iLQR).

Models supply stacked per-step expansions along a nominal trajectory; see
:class:`Model`.  The per-step operations (:func:`quadratize_q`,
:func:`compute_gains`) are also exposed on dataclass types for direct use
and testing; the stacked backward sweep in :mod:`etsddp.backend` implements
the same recursion over whole trajectories.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from . import backend
from .boxqp import IndefiniteHessianError, solve_box_qp

Array = np.ndarray


# ---------------------------------------------------------------------------
# Value types


@dataclass(frozen=True)
class Trajectory:
    """A rollout: states (T+1, n) and controls (T, l)."""

    states: Array
    controls: Array

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        controls = np.asarray(self.controls, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        if states.ndim != 2 or controls.ndim != 2:
            raise ValueError("states and controls must be 2-D arrays")
        if states.shape[0] != controls.shape[0] + 1:
            raise ValueError(
                f"need len(states) == len(controls) + 1, got "
                f"{states.shape[0]} vs {controls.shape[0]}")
        if not (np.isfinite(states).all() and np.isfinite(controls).all()):
            raise ValueError("trajectory entries must be finite")

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]


@dataclass(frozen=True)
class CostExpansion:
    """Second-order expansion of a cost term at one point.

    ``grad_u``/``hess_ux``/``hess_uu`` are None for terminal costs.
    """

    value: float
    grad_x: Array
    hess_xx: Array
    grad_u: Optional[Array] = None
    hess_ux: Optional[Array] = None
    hess_uu: Optional[Array] = None

    def __post_init__(self):
        _require_symmetric(self.hess_xx, "hess_xx")
        if self.hess_uu is not None:
            _require_symmetric(self.hess_uu, "hess_uu")


@dataclass(frozen=True)
class DynamicsExpansion:
    """Step map value and derivatives at one point.

    The optional tensors hold second derivatives of the step map:
    ``tens_xx[i] = d^2 f_i / dx dx`` (n, n), ``tens_ux[i]`` (l, n),
    ``tens_uu[i]`` (l, l).
    """

    next_state: Array
    jac_x: Array
    jac_u: Array
    tens_xx: Optional[Array] = None
    tens_ux: Optional[Array] = None
    tens_uu: Optional[Array] = None


@dataclass(frozen=True)
class QExpansion:
    q_x: Array
    q_u: Array
    q_xx: Array
    q_ux: Array
    q_uu: Array


@dataclass(frozen=True)
class ValueExpansion:
    v_x: Array
    v_xx: Array


@dataclass(frozen=True)
class GainSchedule:
    """Feedforward/feedback gains plus per-step expected-decrease terms.

    The predicted cost change of a forward pass with step s is
    s * sum(dv_linear) + s^2 * sum(dv_quadratic).
    """

    k: Array            # (T, l)
    K: Array            # (T, l, n)
    dv_linear: Array    # (T,)
    dv_quadratic: Array  # (T,)

    def expected_decrease(self, step: float = 1.0) -> float:
        return float(step * self.dv_linear.sum()
                     + step * step * self.dv_quadratic.sum())


@dataclass(frozen=True)
class SolverConfig:
    horizon: int
    max_iterations: int = 500
    cost_tolerance: float = 1e-7
    reg_init: float = 1e-6
    reg_min: float = 1e-9
    reg_max: float = 1e10
    reg_decrease: float = 0.5
    reg_increase: float = 4.0
    line_search_steps: tuple = (1.0, 0.7, 0.5, 0.3, 0.1, 0.03, 0.01)
    use_second_order_dynamics: bool = False
    control_lower: Optional[Array] = None
    control_upper: Optional[Array] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.cost_tolerance <= 0:
            raise ValueError("cost_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        steps = tuple(float(s) for s in self.line_search_steps)
        if not steps or steps[0] != 1.0:
            raise ValueError("line_search_steps must start at 1.0")
        if any(not (0.0 < s <= 1.0) for s in steps):
            raise ValueError("line-search steps must lie in (0, 1]")
        if any(later >= earlier for earlier, later in zip(steps, steps[1:])):
            raise ValueError("line-search steps must be strictly descending")
        object.__setattr__(self, "line_search_steps", steps)
        lower, upper = self.control_lower, self.control_upper
        if (lower is None) != (upper is None):
            raise ValueError("control bounds must be given together")
        if lower is not None:
            lower = np.asarray(lower, dtype=float)
            upper = np.asarray(upper, dtype=float)
            if lower.shape != upper.shape or np.any(lower >= upper):
                raise ValueError("need control_lower < control_upper elementwise")
            object.__setattr__(self, "control_lower", lower)
            object.__setattr__(self, "control_upper", upper)

    @property
    def has_box(self) -> bool:
        return self.control_lower is not None


@dataclass
class SolveReport:
    trajectory: Trajectory
    cost_history: list[float]
    iterations: int
    converged: bool
    iteration_times: list[float] = field(default_factory=list)
    comparison_history: Optional[list[float]] = None
    terminal_mahalanobis: Optional[float] = None

    @property
    def final_cost(self) -> float:
        return self.cost_history[-1]

    @property
    def seconds_per_iteration(self) -> float:
        return float(np.mean(self.iteration_times)) if self.iteration_times else 0.0

    @property
    def total_seconds(self) -> float:
        return float(np.sum(self.iteration_times))


@dataclass
class BackwardPassResult:
    gains: Optional[GainSchedule]
    values: Optional[tuple[Array, Array]]   # stacked v_x (T+1, n), v_xx (T+1, n, n)
    failed_at: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.failed_at is None


# ---------------------------------------------------------------------------
# Model interface


@dataclass
class CostStacks:
    """Stage-cost expansions stacked over t = 0..T-1 plus the terminal pair."""

    l_x: Array      # (T, n)
    l_u: Array      # (T, l)
    l_xx: Array     # (T, n, n)
    l_ux: Array     # (T, l, n)
    l_uu: Array     # (T, l, l)
    phi_x: Array    # (n,)
    phi_xx: Array   # (n, n)


@dataclass
class DynamicsStacks:
    f_x: Array                      # (T, n, n)
    f_u: Array                      # (T, n, l)
    tens_xx: Optional[Array] = None  # (T, n, n, n)
    tens_ux: Optional[Array] = None  # (T, n, l, n)
    tens_uu: Optional[Array] = None  # (T, n, l, l)


class Model(Protocol):
    """What the solver needs from a problem definition."""

    state_dim: int
    control_dim: int

    def step(self, x: Array, u: Array) -> Array: ...

    def rollout(self, x0: Array, us: Array) -> Array: ...

    def trajectory_cost(self, xs: Array, us: Array) -> float: ...

    def cost_expansions(self, xs: Array, us: Array) -> CostStacks: ...

    def dynamics_expansions(self, xs: Array, us: Array,
                            second_order: bool = False) -> DynamicsStacks: ...

    def prepare_iteration(self, xs: Array, us: Array) -> bool: ...


class ModelBase:
    """Default rollout and a no-op iteration hook."""

    state_dim: int
    control_dim: int

    def rollout(self, x0: Array, us: Array) -> Array:
        us = np.asarray(us, dtype=float)
        xs = np.empty((us.shape[0] + 1, self.state_dim))
        xs[0] = x0
        for t in range(us.shape[0]):
            xs[t + 1] = self.step(xs[t], us[t])
        return xs

    def prepare_iteration(self, xs: Array, us: Array) -> bool:
        return False


# ---------------------------------------------------------------------------
# Per-step operations


def _require_symmetric(M: Array, name: str, tol: float = 1e-12) -> None:
    M = np.asarray(M)
    if M.size == 0:
        return
    scale = max(float(np.max(np.abs(M))), 1.0)
    if float(np.max(np.abs(M - M.T))) > tol * scale:
        raise ValueError(f"{name} must be symmetric")


def quadratize_q(cost: CostExpansion, dyn: DynamicsExpansion,
                 value_next: ValueExpansion,
                 use_second_order: bool = False) -> QExpansion:
    """Assemble the local quadratic model of the Q-function at one step."""
    fx = np.atleast_2d(np.asarray(dyn.jac_x, dtype=float))
    fu = np.asarray(dyn.jac_u, dtype=float)
    if fu.ndim == 1:
        fu = fu.reshape(-1, 1)
    vx = np.atleast_1d(np.asarray(value_next.v_x, dtype=float))
    vxx = np.atleast_2d(np.asarray(value_next.v_xx, dtype=float))
    _require_symmetric(vxx, "v_xx")
    n = fx.shape[0]
    l = fu.shape[1]
    grad_x = np.atleast_1d(np.asarray(cost.grad_x, dtype=float))
    grad_u = np.atleast_1d(np.asarray(cost.grad_u, dtype=float))
    if grad_x.shape != (n,) or grad_u.shape != (l,) or vx.shape != (n,):
        raise ValueError("dimension mismatch in Q assembly")

    q_x = grad_x + fx.T @ vx
    q_u = grad_u + fu.T @ vx
    q_xx = np.atleast_2d(cost.hess_xx) + fx.T @ vxx @ fx
    q_ux = np.asarray(cost.hess_ux, dtype=float).reshape(l, n) + fu.T @ vxx @ fx
    q_uu = np.atleast_2d(cost.hess_uu) + fu.T @ vxx @ fu
    if use_second_order and dyn.tens_xx is not None:
        q_xx = q_xx + np.einsum("i,ijk->jk", vx, np.asarray(dyn.tens_xx, dtype=float))
        q_ux = q_ux + np.einsum("i,ijk->jk", vx, np.asarray(dyn.tens_ux, dtype=float))
        q_uu = q_uu + np.einsum("i,ijk->jk", vx, np.asarray(dyn.tens_uu, dtype=float))
    q_xx = 0.5 * (q_xx + q_xx.T)
    q_uu = 0.5 * (q_uu + q_uu.T)
    return QExpansion(q_x=q_x, q_u=q_u, q_xx=q_xx, q_ux=q_ux, q_uu=q_uu)


def compute_gains(q: QExpansion, regularization: float,
                  box: Optional[tuple[Array, Array, Array]] = None
                  ) -> tuple[Array, Array]:
    """Minimize the quadratic Q model: returns (feedforward k, feedback K).

    ``box`` is (lower, upper, nominal_control); when present the feedforward
    solves a box QP over control deltas and feedback rows of clamped
    coordinates are zeroed.  Raises IndefiniteHessianError when the
    regularized control Hessian is not positive definite.
    """
    q_uu = np.atleast_2d(np.asarray(q.q_uu, dtype=float))
    l = q_uu.shape[0]
    q_u = np.atleast_1d(np.asarray(q.q_u, dtype=float))
    q_ux = np.asarray(q.q_ux, dtype=float).reshape(l, -1)
    H = q_uu + regularization * np.eye(l)
    if box is not None:
        lower, upper, u_nom = (np.atleast_1d(np.asarray(a, dtype=float)) for a in box)
        res = solve_box_qp(H, q_u, lower - u_nom, upper - u_nom, np.zeros(l))
        k = res.minimizer
        K = np.zeros((l, q_ux.shape[1]))
        if res.free.any():
            K[res.free] = -res.free_inverse @ q_ux[res.free]
        return k, K
    try:
        chol = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteHessianError(
            "regularized q_uu not positive definite; increase regularization"
        ) from exc
    k = -np.linalg.solve(chol.T, np.linalg.solve(chol, q_u))
    K = -np.linalg.solve(chol.T, np.linalg.solve(chol, q_ux))
    return k, K


# ---------------------------------------------------------------------------
# Passes and the outer loop


def backward_pass(traj: Trajectory, model: Model, config: SolverConfig,
                  regularization: float, pure: bool = False) -> BackwardPassResult:
    """One backward sweep along the nominal trajectory.

    On a positive-definiteness failure the result carries the failing step
    index and no gains; the caller raises the regularization and retries.
    """
    xs, us = traj.states, traj.controls
    cost = model.cost_expansions(xs, us)
    dyn = model.dynamics_expansions(xs, us,
                                    second_order=config.use_second_order_dynamics)
    status, k, K, v_x, v_xx, dv1, dv2 = backend.backward_sweep(
        dyn.f_x, dyn.f_u, cost.l_x, cost.l_u, cost.l_xx, cost.l_ux, cost.l_uu,
        cost.phi_x, cost.phi_xx, regularization,
        u_nom=us if config.has_box else None,
        lower=config.control_lower, upper=config.control_upper,
        t_xx=dyn.tens_xx, t_ux=dyn.tens_ux, t_uu=dyn.tens_uu,
        pure=pure)
    if status >= 0:
        return BackwardPassResult(gains=None, values=None, failed_at=int(status))
    gains = GainSchedule(k=k, K=K, dv_linear=dv1, dv_quadratic=dv2)
    return BackwardPassResult(gains=gains, values=(v_x, v_xx))


def forward_pass(traj_prev: Trajectory, gains: GainSchedule, step: float,
                 model: Model, config: SolverConfig
                 ) -> Optional[tuple[Trajectory, float]]:
    """Nonlinear rollout under the scaled gain policy.

    Returns None when the rollout leaves the finite range (the caller then
    shrinks the step).
    """
    if not (0.0 < step <= 1.0):
        raise ValueError("line-search step must lie in (0, 1]")
    xs_prev, us_prev = traj_prev.states, traj_prev.controls
    T = us_prev.shape[0]
    xs = np.empty_like(xs_prev)
    us = np.empty_like(us_prev)
    xs[0] = xs_prev[0]
    lower, upper = config.control_lower, config.control_upper
    x = xs[0]
    for t in range(T):
        u = us_prev[t] + step * gains.k[t] + gains.K[t] @ (x - xs_prev[t])
        if lower is not None:
            u = np.clip(u, lower, upper)
        us[t] = u
        x = model.step(x, u)
        if not np.isfinite(x).all():
            return None
        xs[t + 1] = x
    cost = model.trajectory_cost(xs, us)
    if not np.isfinite(cost):
        return None
    return Trajectory(states=xs, controls=us), float(cost)


def solve(initial_state: Array, model: Model, config: SolverConfig,
          metric: Optional[Callable[[Array, Array], float]] = None,
          pure: bool = False) -> SolveReport:
    """Run the full DDP loop from zero controls.

    ``metric`` is an optional secondary cost evaluated on each accepted
    trajectory (recorded alongside the objective, e.g. a common comparison
    cost).  Never raises on solver failure; the report carries
    ``converged=False`` instead.
    """
    x0 = np.atleast_1d(np.asarray(initial_state, dtype=float))
    T = config.horizon
    us = np.zeros((T, model.control_dim))
    xs = model.rollout(x0, us)
    traj = Trajectory(states=xs, controls=us)

    model.prepare_iteration(traj.states, traj.controls)
    J = float(model.trajectory_cost(traj.states, traj.controls))
    cost_history = [J]
    comparison_history = None
    if metric is not None:
        comparison_history = [float(metric(traj.states, traj.controls))]

    lam = config.reg_init
    iteration_times: list[float] = []
    converged = False
    iterations = 0

    for _ in range(config.max_iterations):
        iterations += 1
        tic = time.perf_counter()

        bp = backward_pass(traj, model, config, lam, pure=pure)
        while not bp.ok:
            lam = min(config.reg_max, lam * config.reg_increase)
            if lam >= config.reg_max:
                break
            bp = backward_pass(traj, model, config, lam, pure=pure)
        if not bp.ok:
            iteration_times.append(time.perf_counter() - tic)
            cost_history.append(J)
            if comparison_history is not None:
                comparison_history.append(comparison_history[-1])
            break

        # The quadratic model predicts no meaningful full-step improvement:
        # the nominal trajectory is (locally) optimal.
        if abs(bp.gains.expected_decrease(1.0)) < config.cost_tolerance:
            iteration_times.append(time.perf_counter() - tic)
            cost_history.append(J)
            if comparison_history is not None:
                comparison_history.append(float(metric(traj.states, traj.controls)))
            converged = True
            break

        accepted = None
        for step in config.line_search_steps:
            result = forward_pass(traj, bp.gains, step, model, config)
            if result is None:
                continue
            cand, cand_cost = result
            if cand_cost < J:
                accepted = (cand, cand_cost)
                break

        if accepted is not None:
            cand, cand_cost = accepted
            delta = J - cand_cost
            traj = cand
            J = cand_cost
            lam = max(config.reg_min, lam * config.reg_decrease)
        else:
            delta = None
            lam = min(config.reg_max, lam * config.reg_increase)

        iteration_times.append(time.perf_counter() - tic)
        cost_history.append(J)
        if comparison_history is not None:
            comparison_history.append(float(metric(traj.states, traj.controls)))

        if delta is not None and delta < config.cost_tolerance:
            converged = True
            break
        if delta is None and lam >= config.reg_max:
            break

        # Refresh any state the cost landscape keeps about the nominal path
        # (e.g. frozen inside/outside branches); rebase the objective if it
        # changed so the next iteration compares like against like.
        if model.prepare_iteration(traj.states, traj.controls):
            J = float(model.trajectory_cost(traj.states, traj.controls))

    return SolveReport(trajectory=traj, cost_history=cost_history,
                       iterations=iterations, converged=converged,
                       iteration_times=iteration_times,
                       comparison_history=comparison_history)
