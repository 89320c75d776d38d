import pytest

from gaussnet.wavelets import build_meyer


@pytest.fixture(scope="session")
def w1():
    return build_meyer(1)


@pytest.fixture(scope="session")
def w2():
    return build_meyer(2)
