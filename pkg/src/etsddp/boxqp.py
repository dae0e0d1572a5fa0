"""Projected-Newton solver for box-constrained quadratic programs.

Minimizes 0.5 u'Hu + g'u subject to lower <= u <= upper, with H symmetric
positive definite.  Clamped coordinates are detected from the sign of the
gradient at the bounds; Newton steps are taken on the free block with a
backtracking line search on the clamped move.  The inverse of the final
free-free Hessian block is returned so callers can build feedback gains
restricted to the free subspace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class IndefiniteHessianError(np.linalg.LinAlgError):
    """Raised when a Hessian block is not positive definite.

    Callers inside the DDP backward pass respond by increasing the
    regularization and retrying.
    """


MAX_ITERATIONS = 100
GRAD_TOLERANCE = 1e-10
ARMIJO = 0.1
STEP_SHRINK = 0.5
MIN_STEP = 1e-12


@dataclass(frozen=True)
class BoxQPResult:
    minimizer: np.ndarray
    free: np.ndarray            # boolean mask of unclamped coordinates
    free_inverse: np.ndarray    # inverse of H restricted to the free block


def _chol_or_raise(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteHessianError(
            "Hessian block not positive definite; increase regularization"
        ) from exc


def solve_box_qp(hessian: np.ndarray, gradient: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray,
                 start: np.ndarray) -> BoxQPResult:
    H = np.asarray(hessian, dtype=float)
    g = np.asarray(gradient, dtype=float)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if np.any(lo >= hi):
        raise ValueError("box bounds require lower < upper elementwise")

    # Full-matrix factorization up front: guarantees every free block is PD
    # and surfaces indefiniteness to the caller immediately.
    _chol_or_raise(H)

    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    value = 0.5 * x @ H @ x + g @ x

    for _ in range(MAX_ITERATIONS):
        grad = g + H @ x
        clamped = ((x == lo) & (grad > 0)) | ((x == hi) & (grad < 0))
        free = ~clamped
        if not free.any():
            break
        if np.max(np.abs(grad[free])) < GRAD_TOLERANCE:
            break

        Hff = H[np.ix_(free, free)]
        rhs = g[free]
        if clamped.any():
            rhs = rhs + H[np.ix_(free, clamped)] @ x[clamped]
        target = -np.linalg.solve(Hff, rhs)
        dx = np.zeros_like(x)
        dx[free] = target - x[free]
        if np.max(np.abs(dx)) < MIN_STEP:
            break

        step = 1.0
        improved = False
        while step > MIN_STEP:
            cand = np.clip(x + step * dx, lo, hi)
            cand_value = 0.5 * cand @ H @ cand + g @ cand
            if cand_value <= value + ARMIJO * grad @ (cand - x):
                x = cand
                value = cand_value
                improved = True
                break
            step *= STEP_SHRINK
        if not improved:
            break

    grad = g + H @ x
    clamped = ((x == lo) & (grad > 0)) | ((x == hi) & (grad < 0))
    free = ~clamped
    nf = int(free.sum())
    if nf > 0:
        L = _chol_or_raise(H[np.ix_(free, free)])
        eye = np.eye(nf)
        free_inverse = np.linalg.solve(L.T, np.linalg.solve(L, eye))
    else:
        free_inverse = np.zeros((0, 0))
    return BoxQPResult(minimizer=x, free=free, free_inverse=free_inverse)
