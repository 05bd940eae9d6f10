import pytest

from skaudit.source_core import ProductSource, bsc_joint, indep_joint


@pytest.fixture
def bsc01():
    return bsc_joint(0.1)


@pytest.fixture
def bsc02():
    return bsc_joint(0.2)


@pytest.fixture
def bsc01_source(bsc01):
    def build(n):
        return ProductSource(base=bsc01, n=n)
    return build


@pytest.fixture
def indep2():
    return indep_joint(2)
