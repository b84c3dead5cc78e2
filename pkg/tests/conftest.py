import numpy as np
import pytest

import vcross as vc


@pytest.fixture(scope="session")
def grid64():
    return vc.Grid(64)


@pytest.fixture(scope="session")
def grid128():
    return vc.Grid(128)


@pytest.fixture(scope="session")
def grid256():
    return vc.Grid(256)


def mirror(values):
    """Grid image of z -> -z (index (i, j) -> (-i, -j) mod n)."""
    return np.roll(values[::-1, ::-1], (1, 1), (0, 1))


def evenness_error(values):
    return float(np.max(np.abs(values - mirror(values))))
