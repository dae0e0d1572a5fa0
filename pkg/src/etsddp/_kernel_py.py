"""Pure-numpy backward sweep for the DDP backward pass.

Same contract as the compiled kernel in ``_kernel.pyx``; selected as the
fallback lane by :mod:`etsddp.backend` when the extension is unavailable or
disabled.  All output arrays are preallocated by the caller; ``v_x[T]`` and
``v_xx[T]`` must hold the terminal cost expansion on entry.

Returns -1 on success, or the time index whose regularized control Hessian
failed to factorize (the caller increases the regularization and retries).
"""

from __future__ import annotations

import numpy as np

from .boxqp import IndefiniteHessianError, solve_box_qp


def backward_sweep(f_x, f_u, l_x, l_u, l_xx, l_ux, l_uu,
                   lam, has_box, u_nom, lower, upper,
                   has_tensors, t_xx, t_ux, t_uu,
                   k_out, K_out, v_x, v_xx, dv1, dv2):
    T, n, l = f_u.shape
    eye_l = np.eye(l)

    for t in range(T - 1, -1, -1):
        vx = v_x[t + 1]
        vxx = v_xx[t + 1]
        fx = f_x[t]
        fu = f_u[t]

        q_x = l_x[t] + fx.T @ vx
        q_u = l_u[t] + fu.T @ vx
        q_xx = l_xx[t] + fx.T @ vxx @ fx
        q_ux = l_ux[t] + fu.T @ vxx @ fx
        q_uu = l_uu[t] + fu.T @ vxx @ fu
        if has_tensors:
            q_xx = q_xx + np.einsum("i,ijk->jk", vx, t_xx[t])
            q_ux = q_ux + np.einsum("i,ijk->jk", vx, t_ux[t])
            q_uu = q_uu + np.einsum("i,ijk->jk", vx, t_uu[t])
        q_xx = 0.5 * (q_xx + q_xx.T)
        q_uu = 0.5 * (q_uu + q_uu.T)

        H = q_uu + lam * eye_l
        if has_box:
            try:
                qp = solve_box_qp(H, q_u, lower - u_nom[t], upper - u_nom[t],
                                  np.zeros(l))
            except IndefiniteHessianError:
                return t
            k = qp.minimizer
            K = np.zeros((l, n))
            if qp.free.any():
                K[qp.free] = -qp.free_inverse @ q_ux[qp.free]
        else:
            try:
                chol = np.linalg.cholesky(H)
            except np.linalg.LinAlgError:
                return t
            k = -np.linalg.solve(chol.T, np.linalg.solve(chol, q_u))
            K = -np.linalg.solve(chol.T, np.linalg.solve(chol, q_ux))

        k_out[t] = k
        K_out[t] = K
        dv1[t] = k @ q_u
        dv2[t] = 0.5 * k @ q_uu @ k

        # Value recursion in gain form; reduces to
        # V_x = Q_x - Q_xu Q_uu^-1 Q_u, V_xx = Q_xx - Q_xu Q_uu^-1 Q_ux
        # when lam = 0 and nothing clamps.
        quu_k = q_uu @ k
        v_x[t] = q_x + K.T @ quu_k + K.T @ q_u + q_ux.T @ k
        new_vxx = q_xx + K.T @ q_uu @ K + K.T @ q_ux + q_ux.T @ K
        v_xx[t] = 0.5 * (new_vxx + new_vxx.T)

    return -1
