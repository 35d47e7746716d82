"""Fixtures compartidas y la opción --runslow para los experimentos largos."""

import numpy as np
import pytest

from app.core.config import build_config
from app.models.gridworld import GridSpec
from app.utils.gridworld import GridWorld, load_layout


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="corre también los tests marcados slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="necesita --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_spec() -> GridSpec:
    return load_layout()


@pytest.fixture(scope="session")
def default_env(default_spec) -> GridWorld:
    return GridWorld(default_spec)


@pytest.fixture
def small_values():
    """Claves de una configuración chica que corre en pocos segundos."""
    return {
        "episodes_bo": "3",
        "episodes_a": "4",
        "cutoff": "60",
        "n_executions": "2",
        "acq_n_random_starts": "200",
        "acq_n_local_refine": "1",
        "acq_refine_iterations": "12",
    }


@pytest.fixture
def small_config(small_values):
    return build_config(small_values)
