import functools

import pytest

from crsphere import build_basis
from crsphere.operators import OperatorSuite


@functools.lru_cache(maxsize=None)
def cached_basis(degree):
    return build_basis(degree)


@functools.lru_cache(maxsize=None)
def cached_suite(degree):
    return OperatorSuite(cached_basis(degree))


@pytest.fixture(scope="session")
def basis6():
    return cached_basis(6)


@pytest.fixture(scope="session")
def basis8():
    return cached_basis(8)


@pytest.fixture(scope="session")
def suite6():
    return cached_suite(6)


@pytest.fixture(scope="session")
def suite8():
    return cached_suite(8)
