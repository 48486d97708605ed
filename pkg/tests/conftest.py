import itertools

import numpy as np
import pytest

from hismhd import spectral
from hismhd.initdata import SimParams


@pytest.fixture(scope="session")
def grid8():
    return spectral.make_grid(8, 2 * np.pi)


@pytest.fixture(scope="session")
def grid16():
    return spectral.make_grid(16, 2 * np.pi)


@pytest.fixture(scope="session")
def grid32():
    return spectral.make_grid(32, 2 * np.pi)


def make_params(**kw):
    kw.setdefault("m0", 1.5)
    kw.setdefault("delta", 0.25)
    return SimParams(**kw)


def brute_convolution(a, b):
    """O(n^6) direct convolution on the periodic mode lattice."""
    n = a.shape[0]
    idx = np.arange(n)
    out = np.zeros_like(a)
    for i, j, k in itertools.product(range(n), repeat=3):
        out[i, j, k] = np.sum(a * b[np.ix_((i - idx) % n, (j - idx) % n, (k - idx) % n)])
    return out


def rel_err(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return np.max(np.abs(a - b)) / denom
