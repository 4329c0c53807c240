import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_sample_warning(caplog):
    # short runs legitimately record fewer than 100 samples
    caplog.set_level(logging.ERROR, logger="pfc_degenerate.solver")


def band_limited(rng, grid, kmax, scale=1.0):
    coeffs = grid.forward(rng.standard_normal(grid.shape))
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for kk in grid._k:
        keep &= np.abs(kk) <= kmax
    return scale * grid.inverse(np.where(keep, coeffs, 0.0))
