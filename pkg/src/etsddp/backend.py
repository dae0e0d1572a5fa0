"""Selects the backward-sweep kernel lane at import time.

The compiled extension (``etsddp._kernel``) is used when built; otherwise the
pure-numpy implementation in ``_kernel_py`` takes over.  Set ETSDDP_PURE=1 to
force the pure lane regardless.  Both lanes share one contract and are locked
together by parity tests; ``benchmarks/bench_kernel.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

_FORCE_PURE = os.environ.get("ETSDDP_PURE", "").strip().lower() in {"1", "true", "yes"}

_compiled = None
if not _FORCE_PURE:
    try:
        from . import _kernel as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None


def active_backend() -> str:
    """Name of the lane in use: 'compiled' or 'pure'."""
    return "pure" if _compiled is None else "compiled"


def get_kernel(pure: bool = False):
    if pure or _compiled is None:
        return _kernel_py.backward_sweep
    return _compiled.backward_sweep


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def backward_sweep(f_x, f_u, l_x, l_u, l_xx, l_ux, l_uu, phi_x, phi_xx,
                   lam: float, u_nom=None, lower=None, upper=None,
                   t_xx=None, t_ux=None, t_uu=None, pure: bool = False):
    """Run the backward sweep over stacked per-step expansions.

    Returns (status, k, K, v_x, v_xx, dv1, dv2) where status is -1 on
    success or the failing time index when the regularized control Hessian
    is not positive definite at some step.
    """
    f_x = _c(f_x)
    f_u = _c(f_u)
    T, n, l = f_u.shape

    k = np.zeros((T, l))
    K = np.zeros((T, l, n))
    v_x = np.zeros((T + 1, n))
    v_xx = np.zeros((T + 1, n, n))
    phi_xx = np.asarray(phi_xx, dtype=float)
    v_x[T] = phi_x
    v_xx[T] = 0.5 * (phi_xx + phi_xx.T)
    dv1 = np.zeros(T)
    dv2 = np.zeros(T)

    has_box = lower is not None and upper is not None
    if has_box:
        u_nom = _c(u_nom)
        lower = _c(lower)
        upper = _c(upper)
    else:
        u_nom = np.zeros((0, 0))
        lower = np.zeros(0)
        upper = np.zeros(0)

    has_tensors = t_xx is not None
    if has_tensors:
        t_xx = _c(t_xx)
        t_ux = _c(t_ux)
        t_uu = _c(t_uu)
    else:
        t_xx = np.zeros((0, 0, 0, 0))
        t_ux = np.zeros((0, 0, 0, 0))
        t_uu = np.zeros((0, 0, 0, 0))

    fn = get_kernel(pure)
    status = fn(f_x, f_u, _c(l_x), _c(l_u), _c(l_xx), _c(l_ux), _c(l_uu),
                float(lam), has_box, u_nom, lower, upper,
                has_tensors, t_xx, t_ux, t_uu,
                k, K, v_x, v_xx, dv1, dv2)
    return status, k, K, v_x, v_xx, dv1, dv2
