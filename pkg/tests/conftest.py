import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, jitter=0.3):
    M = rng.normal(size=(n, n))
    return M @ M.T + jitter * np.eye(n)


def random_lqr_instance(rng, n, l, T):
    """A well-conditioned random LQR problem (spectral radius of A <= 0.95)."""
    A = rng.normal(size=(n, n))
    radius = max(abs(np.linalg.eigvals(A)))
    if radius > 1e-9:
        A *= 0.95 / radius
    B = rng.normal(size=(n, l))
    Qx = random_spd(rng, n, 0.1)
    Ru = random_spd(rng, l, 0.5)
    Qf = random_spd(rng, n, 0.1)
    x0 = rng.normal(size=n)
    return A, B, Qx, Ru, Qf, T, x0
