"""Finite-horizon LQR solved by the discrete Riccati recursion.

Serves as an independent oracle for the DDP solver on linear-quadratic
problems.  Cost convention (no 1/2 factors):

    J = sum_{t<T} (x_t' Qx x_t + u_t' Ru u_t) + x_T' Qf x_T
    x_{t+1} = A x_t + B u_t
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LqrSolution:
    """Backward-recursion output: value matrices P_t and feedback gains.

    The optimal policy is u_t = -gains[t] @ x_t.
    """

    value_matrices: np.ndarray   # (T+1, n, n)
    gains: np.ndarray            # (T, l, n)


def riccati_recursion(A: np.ndarray, B: np.ndarray, Qx: np.ndarray,
                      Ru: np.ndarray, Qf: np.ndarray, T: int) -> LqrSolution:
    """Run the backward Riccati recursion for a horizon of T steps."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    Qx = np.atleast_2d(np.asarray(Qx, dtype=float))
    Ru = np.atleast_2d(np.asarray(Ru, dtype=float))
    Qf = np.atleast_2d(np.asarray(Qf, dtype=float))
    n = A.shape[0]
    l = B.shape[1]
    if np.min(np.linalg.eigvalsh(0.5 * (Ru + Ru.T))) <= 0.0:
        raise np.linalg.LinAlgError("Ru must be positive definite")

    P = np.zeros((T + 1, n, n))
    K = np.zeros((T, l, n))
    P[T] = 0.5 * (Qf + Qf.T)
    for t in range(T - 1, -1, -1):
        Pn = P[t + 1]
        H = Ru + B.T @ Pn @ B
        K[t] = np.linalg.solve(H, B.T @ Pn @ A)
        Acl = A - B @ K[t]
        Pt = Qx + K[t].T @ Ru @ K[t] + Acl.T @ Pn @ Acl
        P[t] = 0.5 * (Pt + Pt.T)
    return LqrSolution(value_matrices=P, gains=K)


def lqr_oracle(A, B, Qx, Ru, Qf, T: int, x0) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact finite-horizon LQR solution.

    Returns (states (T+1, n), controls (T, l), optimal cost).
    """
    sol = riccati_recursion(A, B, Qx, Ru, Qf, T)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    Qx = np.atleast_2d(np.asarray(Qx, dtype=float))
    Ru = np.atleast_2d(np.asarray(Ru, dtype=float))
    Qf = np.atleast_2d(np.asarray(Qf, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    n = A.shape[0]
    l = B.shape[1]
    xs = np.zeros((T + 1, n))
    us = np.zeros((T, l))
    xs[0] = x0
    cost = 0.0
    for t in range(T):
        us[t] = -sol.gains[t] @ xs[t]
        cost += float(xs[t] @ Qx @ xs[t] + us[t] @ Ru @ us[t])
        xs[t + 1] = A @ xs[t] + B @ us[t]
    cost += float(xs[T] @ Qf @ xs[T])
    return xs, us, cost
