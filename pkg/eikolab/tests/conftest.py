"""Shared fixtures: canonical fields on modest grids and isolated global state."""

import pytest

from eikolab.core.config import get_settings
from eikolab.core.metrics import get_metrics_collector
from eikolab.tools.fields import GridSpec, generate


@pytest.fixture(autouse=True)
def isolated_state():
    """Restore settings mutated by a test and start every test with fresh metrics."""
    settings = get_settings()
    snapshot = settings.model_dump()
    get_metrics_collector().reset_metrics()
    yield
    for name, value in snapshot.items():
        setattr(settings, name, value)


@pytest.fixture(scope="session")
def unit_square_spec():
    """129 x 129 nodes on [-1, 1]^2, h = 1/64."""
    return GridSpec.square(129, 1.0)


@pytest.fixture(scope="session")
def vortex(unit_square_spec):
    return generate("vortex", None, unit_square_spec)


@pytest.fixture(scope="session")
def jump(unit_square_spec):
    return generate("jump", None, unit_square_spec)


@pytest.fixture(scope="session")
def constant(unit_square_spec):
    return generate("constant", None, unit_square_spec)
