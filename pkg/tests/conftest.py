"""Shared fixtures: small enumerated spaces, cached per session."""

import pytest

from spinscape.lattice import Lattice2D, LatticeSpec
from spinscape.landscape import enumerate_space


@pytest.fixture(scope="session")
def space_223_open():
    return enumerate_space(LatticeSpec(2, 2, 3, 2, "open"))


@pytest.fixture(scope="session")
def space_224_open():
    return enumerate_space(LatticeSpec(2, 2, 4, 2, "open"))


@pytest.fixture(scope="session")
def space_2d_33():
    return enumerate_space(Lattice2D(3, 3, 2, "periodic"))


@pytest.fixture(scope="session")
def space_2d_34():
    return enumerate_space(Lattice2D(3, 4, 2, "periodic"))
