import numpy as np
import pytest
from hypothesis import settings

from radrecon.fields import PointSource, PotentialGrid, Scene

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def two_source_scene():
    return Scene(
        1.0,
        (PointSource((0.3, 0.2, -0.1), 1.0), PointSource((-0.2, 0.1, 0.25), 0.5 - 0.3j)),
        None,
        1.0,
    )


@pytest.fixture(scope="session")
def weak_ball():
    """Weak homogeneous ball, slightly off-centre, with ``2κρ = 4``."""
    return PotentialGrid.ball(1.0, 8, 0.1, center=(0.1, -0.05, 0.0))


@pytest.fixture(scope="session")
def weak_ball_operator(weak_ball):
    from radrecon.scattering import LSOperator

    return LSOperator(weak_ball, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
