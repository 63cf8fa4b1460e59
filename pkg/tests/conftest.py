import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kdvlab.field import FrequencyGrid, SpectralField, hs_norm, symmetrize
from kdvlab.symbol import builtin

settings.register_profile("kdvlab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kdvlab")


@pytest.fixture
def kdvks():
    return builtin("kdvks")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_real_field(rng, grid, band=None, decay=True):
    xi = grid.nodes
    c = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    if decay:
        c = c * np.exp(-0.5 * xi**2 / 4.0)
    if band is not None:
        c = np.where(np.abs(xi) <= band, c, 0.0)
    return SpectralField(grid, symmetrize(grid, c), True)


def gaussian(grid, s, norm, width=1.0):
    f = SpectralField.from_function(grid, lambda x: np.exp(-0.5 * (x / width) ** 2) + 0j)
    return f * (norm / hs_norm(f, s))
