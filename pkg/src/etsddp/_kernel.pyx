# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backward sweep for the DDP backward pass.

Contract-identical to :func:`etsddp._kernel_py.backward_sweep`; this lane
exists because the sweep is the hot inner loop (dense small-matrix algebra
plus a per-step box QP over the whole horizon, re-run every iteration).
"""

import numpy as np

from libc.math cimport fabs, sqrt

cdef double GRAD_TOL = 1e-10
cdef double MIN_STEP = 1e-12
cdef double ARMIJO = 0.1
cdef int MAX_QP_ITER = 100


cdef int _cholesky(double[:, ::1] A, double[:, ::1] L, int m):
    """Lower Cholesky of the leading m-by-m block of A into L; 1 on failure."""
    cdef int i, j, p
    cdef double s
    for i in range(m):
        for j in range(i + 1):
            s = A[i, j]
            for p in range(j):
                s -= L[i, p] * L[j, p]
            if i == j:
                if s <= 0.0:
                    return 1
                L[i, j] = sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return 0


cdef void _chol_solve(double[:, ::1] L, double[::1] b, double[::1] out,
                      double[::1] tmp, int m):
    """Solve (L L^T) out = b for the m-by-m factor L."""
    cdef int i, j
    cdef double s
    for i in range(m):
        s = b[i]
        for j in range(i):
            s -= L[i, j] * tmp[j]
        tmp[i] = s / L[i, i]
    for i in range(m - 1, -1, -1):
        s = tmp[i]
        for j in range(i + 1, m):
            s -= L[j, i] * out[j]
        out[i] = s / L[i, i]


cdef double _qp_value(double[:, ::1] H, double[::1] g, double[::1] x, int m):
    cdef int i, j
    cdef double acc = 0.0, hx
    for i in range(m):
        hx = 0.0
        for j in range(m):
            hx += H[i, j] * x[j]
        acc += x[i] * (0.5 * hx + g[i])
    return acc


cdef int _box_qp(double[:, ::1] H, double[::1] g, double[::1] lo,
                 double[::1] hi, int m,
                 double[::1] x, unsigned char[::1] free_mask,
                 double[:, ::1] Lfull, double[:, ::1] Hff, double[:, ::1] Lff,
                 double[::1] grad, double[::1] dx, double[::1] cand,
                 double[::1] rhs, double[::1] sol, double[::1] tmp):
    """Projected-Newton box QP on the current step's regularized Hessian.

    Minimizer lands in ``x`` (entered holding the start point), the final
    free set in ``free_mask``, and the Cholesky factor of the final free
    block in ``Lff``.  Returns 1 if H is not positive definite.
    """
    cdef int i, j, it, nf, a, b, ls
    cdef double val, cand_val, step, gmax, descent, s

    if _cholesky(H, Lfull, m):
        return 1

    for i in range(m):
        if x[i] < lo[i]:
            x[i] = lo[i]
        elif x[i] > hi[i]:
            x[i] = hi[i]
    val = _qp_value(H, g, x, m)

    for it in range(MAX_QP_ITER):
        nf = 0
        gmax = 0.0
        for i in range(m):
            s = g[i]
            for j in range(m):
                s += H[i, j] * x[j]
            grad[i] = s
            if (x[i] == lo[i] and s > 0.0) or (x[i] == hi[i] and s < 0.0):
                free_mask[i] = 0
            else:
                free_mask[i] = 1
                nf += 1
                if fabs(s) > gmax:
                    gmax = fabs(s)
        if nf == 0 or gmax < GRAD_TOL:
            break

        # Newton target on the free block, holding clamped coordinates fixed.
        a = 0
        for i in range(m):
            if not free_mask[i]:
                continue
            s = g[i]
            b = 0
            for j in range(m):
                if free_mask[j]:
                    Hff[a, b] = H[i, j]
                    b += 1
                else:
                    s += H[i, j] * x[j]
            rhs[a] = s
            a += 1
        if _cholesky(Hff, Lff, nf):
            return 1
        _chol_solve(Lff, rhs, sol, tmp, nf)

        a = 0
        gmax = 0.0
        for i in range(m):
            if free_mask[i]:
                dx[i] = -sol[a] - x[i]
                a += 1
            else:
                dx[i] = 0.0
            if fabs(dx[i]) > gmax:
                gmax = fabs(dx[i])
        if gmax < MIN_STEP:
            break

        step = 1.0
        ls = 0
        while step > MIN_STEP:
            descent = 0.0
            for i in range(m):
                s = x[i] + step * dx[i]
                if s < lo[i]:
                    s = lo[i]
                elif s > hi[i]:
                    s = hi[i]
                cand[i] = s
                descent += grad[i] * (s - x[i])
            cand_val = _qp_value(H, g, cand, m)
            if cand_val <= val + ARMIJO * descent:
                for i in range(m):
                    x[i] = cand[i]
                val = cand_val
                ls = 1
                break
            step *= 0.5
        if not ls:
            break

    # Final free set and factor of the free block for feedback gains.
    nf = 0
    for i in range(m):
        s = g[i]
        for j in range(m):
            s += H[i, j] * x[j]
        if (x[i] == lo[i] and s > 0.0) or (x[i] == hi[i] and s < 0.0):
            free_mask[i] = 0
        else:
            free_mask[i] = 1
            nf += 1
    if nf > 0:
        a = 0
        for i in range(m):
            if not free_mask[i]:
                continue
            b = 0
            for j in range(m):
                if free_mask[j]:
                    Hff[a, b] = H[i, j]
                    b += 1
            a += 1
        if _cholesky(Hff, Lff, nf):
            return 1
    return 0


def backward_sweep(double[:, :, ::1] f_x, double[:, :, ::1] f_u,
                   double[:, ::1] l_x, double[:, ::1] l_u,
                   double[:, :, ::1] l_xx, double[:, :, ::1] l_ux,
                   double[:, :, ::1] l_uu,
                   double lam, bint has_box,
                   double[:, ::1] u_nom, double[::1] lower, double[::1] upper,
                   bint has_tensors,
                   double[:, :, :, ::1] t_xx, double[:, :, :, ::1] t_ux,
                   double[:, :, :, ::1] t_uu,
                   double[:, ::1] k_out, double[:, :, ::1] K_out,
                   double[:, ::1] v_x, double[:, :, ::1] v_xx,
                   double[::1] dv1, double[::1] dv2):
    cdef int T = f_u.shape[0]
    cdef int n = f_u.shape[1]
    cdef int l = f_u.shape[2]
    cdef int t, i, j, p, a, b, nf
    cdef double s, acc

    q_x_b = np.empty(n); q_u_b = np.empty(l)
    q_xx_b = np.empty((n, n)); q_ux_b = np.empty((l, n)); q_uu_b = np.empty((l, l))
    H_b = np.empty((l, l)); Lf_b = np.empty((l, l))
    W_b = np.empty((n, n)); Wu_b = np.empty((n, l))
    k_b = np.empty(l); quuk_b = np.empty(l)
    Kt_b = np.empty((l, n)); KTQ_b = np.empty((n, l))
    lo_b = np.empty(l); hi_b = np.empty(l)
    free_b = np.empty(l, dtype=np.uint8)
    Hff_b = np.empty((l, l)); Lff_b = np.empty((l, l))
    grad_b = np.empty(l); dx_b = np.empty(l); cand_b = np.empty(l)
    rhs_b = np.empty(l); sol_b = np.empty(l); tmp_b = np.empty(l)
    colrhs_b = np.empty(l); colsol_b = np.empty(l)

    cdef double[::1] q_x = q_x_b, q_u = q_u_b, k = k_b, quuk = quuk_b
    cdef double[:, ::1] q_xx = q_xx_b, q_ux = q_ux_b, q_uu = q_uu_b
    cdef double[:, ::1] H = H_b, Lf = Lf_b, W = W_b, Wu = Wu_b
    cdef double[:, ::1] Kt = Kt_b, KTQ = KTQ_b
    cdef double[::1] lo = lo_b, hi = hi_b
    cdef unsigned char[::1] free_mask = free_b
    cdef double[:, ::1] Hff = Hff_b, Lff = Lff_b
    cdef double[::1] grad = grad_b, dx = dx_b, cand = cand_b
    cdef double[::1] rhs = rhs_b, sol = sol_b, tmp = tmp_b
    cdef double[::1] colrhs = colrhs_b, colsol = colsol_b

    for t in range(T - 1, -1, -1):
        # q_x = l_x + f_x' v_x ; q_u = l_u + f_u' v_x
        for a in range(n):
            s = l_x[t, a]
            for i in range(n):
                s += f_x[t, i, a] * v_x[t + 1, i]
            q_x[a] = s
        for a in range(l):
            s = l_u[t, a]
            for i in range(n):
                s += f_u[t, i, a] * v_x[t + 1, i]
            q_u[a] = s

        # W = v_xx f_x ; Wu = v_xx f_u
        for i in range(n):
            for a in range(n):
                s = 0.0
                for j in range(n):
                    s += v_xx[t + 1, i, j] * f_x[t, j, a]
                W[i, a] = s
            for a in range(l):
                s = 0.0
                for j in range(n):
                    s += v_xx[t + 1, i, j] * f_u[t, j, a]
                Wu[i, a] = s

        for a in range(n):
            for b in range(n):
                s = l_xx[t, a, b]
                for i in range(n):
                    s += f_x[t, i, a] * W[i, b]
                q_xx[a, b] = s
        for a in range(l):
            for b in range(n):
                s = l_ux[t, a, b]
                for i in range(n):
                    s += f_u[t, i, a] * W[i, b]
                q_ux[a, b] = s
            for b in range(l):
                s = l_uu[t, a, b]
                for i in range(n):
                    s += f_u[t, i, a] * Wu[i, b]
                q_uu[a, b] = s

        if has_tensors:
            for i in range(n):
                s = v_x[t + 1, i]
                for a in range(n):
                    for b in range(n):
                        q_xx[a, b] += s * t_xx[t, i, a, b]
                for a in range(l):
                    for b in range(n):
                        q_ux[a, b] += s * t_ux[t, i, a, b]
                    for b in range(l):
                        q_uu[a, b] += s * t_uu[t, i, a, b]

        for a in range(n):
            for b in range(a + 1, n):
                s = 0.5 * (q_xx[a, b] + q_xx[b, a])
                q_xx[a, b] = s
                q_xx[b, a] = s
        for a in range(l):
            for b in range(a + 1, l):
                s = 0.5 * (q_uu[a, b] + q_uu[b, a])
                q_uu[a, b] = s
                q_uu[b, a] = s

        for a in range(l):
            for b in range(l):
                H[a, b] = q_uu[a, b]
            H[a, a] += lam

        if has_box:
            for a in range(l):
                lo[a] = lower[a] - u_nom[t, a]
                hi[a] = upper[a] - u_nom[t, a]
                k[a] = 0.0
            if _box_qp(H, q_u, lo, hi, l, k, free_mask,
                       Lf, Hff, Lff, grad, dx, cand, rhs, sol, tmp):
                return t
            # K rows: zero for clamped coordinates, -Hff^-1 q_ux on the free.
            for a in range(l):
                for b in range(n):
                    Kt[a, b] = 0.0
            nf = 0
            for a in range(l):
                if free_mask[a]:
                    nf += 1
            if nf > 0:
                for b in range(n):
                    i = 0
                    for a in range(l):
                        if free_mask[a]:
                            colrhs[i] = q_ux[a, b]
                            i += 1
                    _chol_solve(Lff, colrhs, colsol, tmp, nf)
                    i = 0
                    for a in range(l):
                        if free_mask[a]:
                            Kt[a, b] = -colsol[i]
                            i += 1
        else:
            if _cholesky(H, Lf, l):
                return t
            _chol_solve(Lf, q_u, k, tmp, l)
            for a in range(l):
                k[a] = -k[a]
            for b in range(n):
                for a in range(l):
                    colrhs[a] = q_ux[a, b]
                _chol_solve(Lf, colrhs, colsol, tmp, l)
                for a in range(l):
                    Kt[a, b] = -colsol[a]

        for a in range(l):
            k_out[t, a] = k[a]
            for b in range(n):
                K_out[t, a, b] = Kt[a, b]

        # Expected cost decrease terms (unregularized q_uu).
        s = 0.0
        for a in range(l):
            acc = 0.0
            for b in range(l):
                acc += q_uu[a, b] * k[b]
            quuk[a] = acc
            s += k[a] * q_u[a]
        dv1[t] = s
        s = 0.0
        for a in range(l):
            s += k[a] * quuk[a]
        dv2[t] = 0.5 * s

        # Value recursion in gain form.
        for a in range(n):
            s = q_x[a]
            for i in range(l):
                s += Kt[i, a] * (quuk[i] + q_u[i]) + q_ux[i, a] * k[i]
            v_x[t, a] = s
        # KTQ = K' q_uu
        for a in range(n):
            for i in range(l):
                s = 0.0
                for j in range(l):
                    s += Kt[j, a] * q_uu[j, i]
                KTQ[a, i] = s
        for a in range(n):
            for b in range(n):
                s = q_xx[a, b]
                for i in range(l):
                    s += KTQ[a, i] * Kt[i, b] + Kt[i, a] * q_ux[i, b] \
                        + q_ux[i, a] * Kt[i, b]
                v_xx[t, a, b] = s
        for a in range(n):
            for b in range(a + 1, n):
                s = 0.5 * (v_xx[t, a, b] + v_xx[t, b, a])
                v_xx[t, a, b] = s
                v_xx[t, b, a] = s

    return -1
