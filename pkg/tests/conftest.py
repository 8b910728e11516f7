import numpy as np
import pytest

from impvf.corpus import corpus_path
from impvf.dsl import load_problem
from impvf.gronwall import load_gronwall


@pytest.fixture
def problem():
    """Loader for bundled problem files by stem."""
    return lambda name: load_problem(corpus_path(name))


@pytest.fixture
def instance():
    return lambda name: load_gronwall(corpus_path(name))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
