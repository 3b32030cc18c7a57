import numpy as np
import pytest

import bih4 as b
from bih4.potentials import grid_for_potential


@pytest.fixture(scope="session")
def grid512():
    return b.build_grid(12.0, 512)


@pytest.fixture(scope="session")
def grid256():
    return b.build_grid(12.0, 256)


@pytest.fixture(scope="session")
def gaussian_setup():
    pot = b.gaussian(0.4)
    grid = b.build_grid(12.0, 256)
    td = b.build_threshold(pot, grid)
    chain = b.build_s_chain(td)
    return pot, td, chain


@pytest.fixture(scope="session")
def resonance_setup():
    pot = b.make_remark16_resonance(1.0, 1.0)
    grid = grid_for_potential(pot, 384)
    td = b.build_threshold(pot, grid)
    chain = b.build_s_chain(td)
    return pot, td, chain


@pytest.fixture(scope="session")
def second_kind_setup():
    pot = b.resonance_slope_family(0.0)
    grid = grid_for_potential(pot, 384)
    td = b.build_threshold(pot, grid)
    chain = b.build_s_chain(td)
    return pot, td, chain


@pytest.fixture(scope="session")
def eigenvalue_setup():
    pot = b.make_remark16_eigenvalue(0.3)
    grid = grid_for_potential(pot, 512)
    td = b.build_threshold(pot, grid)
    chain = b.build_s_chain(td)
    return pot, td, chain


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
