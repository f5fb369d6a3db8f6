import numpy as np
import pytest

from nlslab.bubbles import ModelParams, geometric_ladder
from nlslab.spectral import Field, Grid, transform


@pytest.fixture
def grid1d():
    return Grid(1, 256, 2 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def random_field(grid1d, rng):
    vals = rng.standard_normal(grid1d.shape) + 1j * rng.standard_normal(grid1d.shape)
    return Field(grid1d, vals)


@pytest.fixture
def params1d():
    return ModelParams(dim=1, m=3, s=0.1)


@pytest.fixture
def ladder1(params1d):
    return geometric_ladder(params1d, h0=0.5, gamma=0.5, rungs=1, r1=1.5)


def band_limited(grid, lo, hi, rng, real=False):
    """Random field supported on positive mode indices [lo, hi)."""
    spec = np.zeros(grid.shape, dtype=complex)
    spec[lo:hi] = rng.standard_normal(hi - lo) + 1j * rng.standard_normal(hi - lo)
    if real:
        for j in range(lo, hi):
            spec[-j] = np.conj(spec[j])
    out = transform(Field(grid, spec, "spectral"), "inverse")
    if real:
        out = Field(grid, out.values.real)
    return out
