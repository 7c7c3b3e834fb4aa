import math

import numpy as np
import pytest

import linalg


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def anomalous():
    """sigma_z with psi_i = (cos pi/3, sin pi/3), psi_f = (cos pi/3, -sin pi/3): weak value -2."""
    c, s = math.cos(math.pi / 3), math.sin(math.pi / 3)
    return linalg.SIGMA_Z.copy(), linalg.ket([c, s]), linalg.ket([c, -s])


@pytest.fixture
def plus_zero():
    return linalg.KET_PLUS.copy(), linalg.KET0.copy()
