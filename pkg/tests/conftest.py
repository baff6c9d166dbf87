import numpy as np
import pytest

from mhd25.grid import Grid
from mhd25.dyadic import DyadicBlocks


@pytest.fixture(scope="session")
def grid32():
    return Grid(32, 2 * np.pi)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64, 2 * np.pi)


@pytest.fixture(scope="session")
def grid128():
    return Grid(128, 2 * np.pi)


@pytest.fixture(scope="session")
def wide_grid():
    """Larger box so several negative dyadic levels are resolvable."""
    return Grid(128, 8 * np.pi)


@pytest.fixture(scope="session")
def blocks32(grid32):
    return DyadicBlocks(grid32)


@pytest.fixture(scope="session")
def blocks64(grid64):
    return DyadicBlocks(grid64)


@pytest.fixture(scope="session")
def blocks128(grid128):
    return DyadicBlocks(grid128)


@pytest.fixture(scope="session")
def wide_blocks(wide_grid):
    return DyadicBlocks(wide_grid)
