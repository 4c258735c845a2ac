import numpy as np
import pytest

from hullproj import Dataset


def fd_gradient(fn, x, h=1e-6):
    """Central finite differences of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        out[i] = (fn(x + step) - fn(x - step)) / (2.0 * h)
    return out


def random_instance(rng, n_lo=3, n_hi=12, d_lo=2, d_hi=5, q_scale=1.5):
    """Gaussian dataset plus a query drawn near (often outside) the cloud."""
    n = int(rng.integers(n_lo, n_hi + 1))
    d = int(rng.integers(d_lo, d_hi + 1))
    data = Dataset(rng.standard_normal((n, d)))
    q = q_scale * rng.standard_normal(d)
    return data, q


def random_simplex(rng, n):
    return rng.dirichlet(np.ones(n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
