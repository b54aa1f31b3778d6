import pytest

from standbymmap.assembler import assemble_all
from standbymmap.config import example_fleet_config
from standbymmap.solvers import stationary_direct


@pytest.fixture(scope="session")
def optimal_config():
    """The bundled four-unit fleet at its optimized Erlang vacation."""
    return example_fleet_config()


@pytest.fixture(scope="session")
def optimal_gens(optimal_config):
    return assemble_all(optimal_config, validate=False)


@pytest.fixture(scope="session")
def optimal_pi(optimal_gens):
    return stationary_direct(optimal_gens)
