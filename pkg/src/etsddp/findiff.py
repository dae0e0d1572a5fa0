"""Central finite-difference helpers for derivative checks.

Used by the test suite to validate analytic gradients/Jacobians and by the
optional second-order dynamics mode to build curvature tensors from analytic
Jacobians.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def central_gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def central_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of a vector function, shape (m, n)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    jac = np.zeros((f0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        jac[:, i] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h)
    return jac


def central_hessian(f: Callable[[np.ndarray], float], x: np.ndarray,
                    h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function (symmetrized)."""
    hess = central_jacobian(lambda y: central_gradient(f, y, h), x, h)
    return 0.5 * (hess + hess.T)


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """Max elementwise error of ``a`` vs ``b``, scaled by max(|b|, floor)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(b))) if b.size else 0.0, floor)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0
