"""Compares the compiled backward-sweep kernel against the pure-numpy lane.

Times the raw sweep on stacked expansions (the hot loop) and an end-to-end
parking solve through each lane.  Run from the repository root:

    python3 benchmarks/bench_kernel.py
"""

import math
import time

import numpy as np

from etsddp import backend
from etsddp.car import BOX_LOWER, BOX_UPPER, CarParams
from etsddp.ets import point_solve
from etsddp.solver import SolverConfig


def sweep_inputs(T, n, l, seed=0):
    rng = np.random.default_rng(seed)
    f_x = rng.normal(size=(T, n, n)) * 0.4
    f_u = rng.normal(size=(T, n, l))
    l_x = rng.normal(size=(T, n))
    l_u = rng.normal(size=(T, l))
    spd = lambda m: (lambda M: M @ np.swapaxes(M, 1, 2) + 0.5 * np.eye(m))(
        rng.normal(size=(T, m, m)))
    l_xx = spd(n)
    l_ux = rng.normal(size=(T, l, n)) * 0.2
    l_uu = spd(l)
    phi_x = rng.normal(size=n)
    phi_xx = np.eye(n)
    box = dict(u_nom=rng.uniform(-0.3, 0.3, size=(T, l)),
               lower=-0.5 * np.ones(l), upper=0.5 * np.ones(l))
    return (f_x, f_u, l_x, l_u, l_xx, l_ux, l_uu, phi_x, phi_xx), box


def time_sweep(args, box, pure, repeats=20):
    # warm up once, then take the best of `repeats`
    backend.backward_sweep(*args, 1e-6, pure=pure, **box)
    best = math.inf
    for _ in range(repeats):
        tic = time.perf_counter()
        status = backend.backward_sweep(*args, 1e-6, pure=pure, **box)[0]
        best = min(best, time.perf_counter() - tic)
        assert status == -1
    return best


def time_parking_solve(pure):
    cfg = SolverConfig(horizon=500, max_iterations=200,
                       control_lower=BOX_LOWER, control_upper=BOX_UPPER)
    x0 = np.array([3.0, 3.0, 3.0 * math.pi / 2.0, 0.0])
    tic = time.perf_counter()
    report = point_solve(x0, CarParams(), np.zeros(4), cfg, pure=pure)
    return time.perf_counter() - tic, report.iterations


def main():
    have_compiled = backend.active_backend() == "compiled"
    print(f"active backend: {backend.active_backend()}")
    print()
    print(f"{'case':<38}{'pure':>12}{'compiled':>12}{'speedup':>10}")
    for label, (T, n, l) in [("backward sweep T=500 n=4 l=2 (parking)", (500, 4, 2)),
                             ("backward sweep T=1000 n=10 l=4", (1000, 10, 4))]:
        args, box = sweep_inputs(T, n, l)
        t_pure = time_sweep(args, box, pure=True)
        if have_compiled:
            t_fast = time_sweep(args, box, pure=False)
            print(f"{label:<38}{t_pure * 1e3:>10.2f}ms{t_fast * 1e3:>10.2f}ms"
                  f"{t_pure / t_fast:>9.1f}x")
        else:
            print(f"{label:<38}{t_pure * 1e3:>10.2f}ms{'n/a':>12}{'':>10}")

    # lanes agree to ~1e-12, not bitwise, so iteration counts may differ by
    # a few near the convergence threshold; report both
    t_pure, iters = time_parking_solve(pure=True)
    if have_compiled:
        t_fast, iters_fast = time_parking_solve(pure=False)
        print(f"{'parking point solve (200 iter cap)':<38}{t_pure:>11.2f}s"
              f"{t_fast:>11.2f}s{t_pure / t_fast:>9.1f}x"
              f"   ({iters} vs {iters_fast} iterations)")
    else:
        print(f"{'parking point solve (200 iter cap)':<38}{t_pure:>11.2f}s"
              f"{'n/a':>12}   ({iters} iterations)")


if __name__ == "__main__":
    main()
