"""Test configuration and fixtures"""

import numpy as np
import pytest

from confocal.schemas.geometry import CharacteristicRadical, ConfocalFamily, PlanarRadical


@pytest.fixture
def axes3():
    """Reference axes of the spatial family"""
    return (3.0, 2.0, 1.0)


@pytest.fixture
def family3(axes3):
    return ConfocalFamily(axes=axes3)


@pytest.fixture
def family2():
    return ConfocalFamily(axes=(2.0, 1.0))


@pytest.fixture
def rad(axes3):
    """Radical of the ellipsoid u3 = 0 and the hyperboloid u2 = 1.5"""
    return CharacteristicRadical(axes=axes3, u2_0=1.5, u3_0=0.0)


@pytest.fixture
def planar_rad():
    return PlanarRadical(axes=(2.0, 1.0), caustic=0.0)


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.default_rng(12345)
