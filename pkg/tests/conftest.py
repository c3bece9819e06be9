import os
import tempfile

# logging is configured on first import of the root package
os.environ.setdefault("BACKBONE_LOG_FILE", os.path.join(tempfile.gettempdir(), "backbone-tests.log"))
os.environ.setdefault("BACKBONE_LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from helpers.lattice import RegionSpec, build_region


@pytest.fixture(scope="session")
def kappa_grid():
    return [float(k) for k in np.linspace(4.05, 7.95, 50)]


@pytest.fixture(scope="session")
def ball1():
    return build_region(RegionSpec.ball(1))


@pytest.fixture(scope="session")
def ball2():
    return build_region(RegionSpec.ball(2))


@pytest.fixture(scope="session")
def small_annulus():
    # 18 sites: the rings at squared norm 1, 3 and 4
    return build_region(RegionSpec.annulus(0, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
