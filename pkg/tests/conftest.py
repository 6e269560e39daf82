import numpy as np
import pytest

from muskatss import LMConfig, ResidualConfig, fit_spline, make_grid
from muskatss.quadrature import QuadConfig


def cheap_residual_config():
    """Small outer grid for unit tests that only need qualitative behavior."""
    return ResidualConfig(outer_nodes=120)


def cheap_lm_config():
    return LMConfig(threads=2)


@pytest.fixture(scope="session")
def grid129():
    return make_grid(129)


@pytest.fixture(scope="session")
def linear_profile_01(grid129):
    """Linear-in-z ansatz with slope 0.1 (not a solution; cheap test input)."""
    values = (2.0 / np.pi) * 0.1 * grid129.nodes
    return fit_spline(grid129, values, 0.1)


def random_odd_values(grid, rng, scale=0.3):
    """Smooth random odd-consistent nodal values (values[0] = 0)."""
    z = grid.nodes
    coeffs = rng.normal(size=4) * scale
    vals = (coeffs[0] * np.sin(z) + coeffs[1] * np.sin(2 * z) / 2
            + coeffs[2] * z * np.cos(z / 2) + coeffs[3] * z ** 3 / 5)
    vals[0] = 0.0
    return vals
