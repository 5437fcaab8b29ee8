import math

import numpy as np
import pytest

from phasedrop import ModelParams, ScalarField, make_grid
from phasedrop.physics import initial_state


@pytest.fixture
def unit_grid_64():
    return make_grid([64, 64])


def tanh_disk(grid, center, radius, epsilon):
    """Signed-distance tanh profile of a disk, positive inside."""
    coords = grid.cell_centers()
    dist_sq = None
    for ax in range(grid.ndim):
        d = np.abs(
            (coords[ax] - center[ax] + 0.5 * grid.lengths[ax]) % grid.lengths[ax]
            - 0.5 * grid.lengths[ax]
        )
        dist_sq = d * d if dist_sq is None else dist_sq + d * d
    signed = radius - np.sqrt(dist_sq)
    vals = 0.5 * (1.0 + np.tanh(signed / (2.0 * math.sqrt(2.0) * epsilon)))
    return ScalarField(grid, np.broadcast_to(vals, grid.dims).copy())


def disk_state(grid, params: ModelParams, radius=0.3, u_value=0.5, center=None):
    center = center or tuple(ell / 2 for ell in grid.lengths)
    phi0 = tanh_disk(grid, center, radius, params.epsilon)
    u0 = ScalarField.full(grid, u_value)
    return initial_state(phi0, u0, params)
