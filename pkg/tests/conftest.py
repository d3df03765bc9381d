import numpy as np
import pytest

from isopath import synthetic
from isopath.param import parameterize

FLAT_TARGET = float(np.sqrt(32.0))


@pytest.fixture(scope="session")
def plane40():
    """Jittered 40 x 40 mm planar grid."""
    return synthetic.plane(40.0, spacing=1.0, jitter=0.2, seed=7)


@pytest.fixture(scope="session")
def plane40_param(plane40):
    return parameterize(plane40.cloud, plane40.breaks, "rect")


@pytest.fixture(scope="session")
def flat_exact():
    """Exact planar grid whose width holds a whole number of flat side intervals."""
    return synthetic.plane(7 * FLAT_TARGET, spacing=1.0)


@pytest.fixture(scope="session")
def flat_exact_param(flat_exact):
    return parameterize(flat_exact.cloud, flat_exact.breaks, "rect")


@pytest.fixture(scope="session")
def sphere():
    return synthetic.sphere_cap(50.0, 45, 1.0, jitter=0.2, seed=11)


@pytest.fixture(scope="session")
def sphere_param(sphere):
    return parameterize(sphere.cloud, sphere.breaks, "rect")


@pytest.fixture(scope="session")
def cylinder():
    return synthetic.cylinder_patch(25.0, 20.0, 40.0, 1.0, jitter=0.2, seed=5)


@pytest.fixture(scope="session")
def cylinder_param(cylinder):
    return parameterize(cylinder.cloud, cylinder.breaks, "rect")


@pytest.fixture(scope="session")
def disk20():
    return synthetic.flat_disk(20.0, spacing=1.0)


@pytest.fixture(scope="session")
def disk20_param(disk20):
    return parameterize(disk20.cloud, disk20.breaks, "disk")
