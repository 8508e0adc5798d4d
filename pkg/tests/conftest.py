import numpy as np
import pytest

from hearthrom import fem, geometry


@pytest.fixture(scope="session")
def macro():
    return geometry.reference_decomposition()


@pytest.fixture(scope="session")
def mesh_l1(macro):
    return geometry.refine(macro, 1)


@pytest.fixture(scope="session")
def scalar_l1(mesh_l1):
    return fem.FunctionSpace(mesh_l1, 1, "scalar")


@pytest.fixture(scope="session")
def vector_l1(mesh_l1):
    return fem.FunctionSpace(mesh_l1, 1, "vector")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
