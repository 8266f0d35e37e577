import numpy as np
import pytest

import fundsol as fs


@pytest.fixture(scope="session")
def ext_laplace():
    return fs.extend(fs.builtin("Laplace"))


@pytest.fixture(scope="session")
def ext_iso():
    return fs.extend(fs.iso_elastic(1.0, 0.3))


@pytest.fixture(scope="session")
def ext_cu():
    return fs.extend(fs.builtin("Cu"))


@pytest.fixture(scope="session")
def ext_m2():
    return fs.extend(fs.builtin("M2"))


@pytest.fixture(scope="session")
def base_laplace(ext_laplace):
    return fs.base_coefficients(ext_laplace, 8)


@pytest.fixture(scope="session")
def base_iso(ext_iso):
    return fs.base_coefficients(ext_iso, 10)


@pytest.fixture(scope="session")
def base_cu(ext_cu):
    # degree 43 supports truncation 40 after three derivative steps
    return fs.base_coefficients(ext_cu, 43)


@pytest.fixture(scope="session")
def base_m2(ext_m2):
    return fs.base_coefficients(ext_m2, 24)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)


def random_directions(rng, count):
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]
