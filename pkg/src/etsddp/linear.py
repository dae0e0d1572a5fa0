"""Linear dynamics with quadratic costs, in the solver's model interface.

Cost convention matches :mod:`etsddp.riccati`: J = sum x'Qx x + u'Ru u plus
terminal x'Qf x, with no 1/2 factors.
"""

from __future__ import annotations

import numpy as np

from .solver import CostStacks, DynamicsStacks, ModelBase


class LinearQuadraticModel(ModelBase):
    def __init__(self, A, B, Qx, Ru, Qf):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_1d(np.asarray(B, dtype=float))
        self.B = B.reshape(-1, 1) if B.ndim == 1 else B
        self.Qx = np.atleast_2d(np.asarray(Qx, dtype=float))
        self.Ru = np.atleast_2d(np.asarray(Ru, dtype=float))
        self.Qf = np.atleast_2d(np.asarray(Qf, dtype=float))
        self.state_dim = self.A.shape[0]
        self.control_dim = self.B.shape[1]

    def step(self, x, u):
        return self.A @ x + self.B @ u

    def rollout(self, x0, us):
        us = np.asarray(us, dtype=float)
        xs = np.empty((us.shape[0] + 1, self.state_dim))
        xs[0] = x0
        for t in range(us.shape[0]):
            xs[t + 1] = self.A @ xs[t] + self.B @ us[t]
        return xs

    def trajectory_cost(self, xs, us) -> float:
        stage = np.einsum("ti,ij,tj->", xs[:-1], self.Qx, xs[:-1]) \
            + np.einsum("ti,ij,tj->", us, self.Ru, us)
        return float(stage + xs[-1] @ self.Qf @ xs[-1])

    def cost_expansions(self, xs, us) -> CostStacks:
        T = us.shape[0]
        n, l = self.state_dim, self.control_dim
        return CostStacks(
            l_x=2.0 * xs[:-1] @ self.Qx.T,
            l_u=2.0 * us @ self.Ru.T,
            l_xx=np.broadcast_to(2.0 * self.Qx, (T, n, n)).copy(),
            l_ux=np.zeros((T, l, n)),
            l_uu=np.broadcast_to(2.0 * self.Ru, (T, l, l)).copy(),
            phi_x=2.0 * self.Qf @ xs[-1],
            phi_xx=2.0 * self.Qf,
        )

    def dynamics_expansions(self, xs, us, second_order: bool = False) -> DynamicsStacks:
        T = us.shape[0]
        n, l = self.state_dim, self.control_dim
        stacks = DynamicsStacks(
            f_x=np.broadcast_to(self.A, (T, n, n)).copy(),
            f_u=np.broadcast_to(self.B, (T, n, l)).copy(),
        )
        if second_order:
            stacks.tens_xx = np.zeros((T, n, n, n))
            stacks.tens_ux = np.zeros((T, n, l, n))
            stacks.tens_uu = np.zeros((T, n, l, l))
        return stacks
