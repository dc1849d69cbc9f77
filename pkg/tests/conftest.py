import pytest

from ceg_remedy.ceg import build_ceg
from ceg_remedy.fixtures import (
    bushing_staged_tree,
    reliability_extraction_config,
    two_level_model,
    warning_lights_staged_tree,
)
from ceg_remedy.trees import compute_positions


@pytest.fixture(scope="session")
def bushing():
    stree = bushing_staged_tree()
    positions = compute_positions(stree)
    return stree, positions, build_ceg(stree, positions)


@pytest.fixture(scope="session")
def warning_lights():
    stree = warning_lights_staged_tree()
    positions = compute_positions(stree)
    return stree, positions, build_ceg(stree, positions)


@pytest.fixture(scope="session")
def two_level():
    return two_level_model()


@pytest.fixture(scope="session")
def extraction_config():
    return reliability_extraction_config()
