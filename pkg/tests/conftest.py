import numpy as np
import pytest

from hieranderson.randomness import SingleSiteDistribution
from hieranderson.structure import HierarchicalStructure, geometric_weights


@pytest.fixture
def binary():
    """n = 2 up to rank 6."""
    return HierarchicalStructure.homogeneous(2, 6)


@pytest.fixture
def mixed():
    """Branching (3, 2, 2), the layout of the enumeration example."""
    return HierarchicalStructure.from_branching((3, 2, 2))


@pytest.fixture
def rho2():
    return geometric_weights(2.0)


@pytest.fixture
def uniform():
    return SingleSiteDistribution.uniform(-1.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def experiment_file(tmp_path):
    """Write a small experiment YAML and return its path."""

    def write(text: str, name: str = "experiment.yml"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
