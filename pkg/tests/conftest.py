"""
Pytest fixtures for orbita tests.

Bench fixtures come in two sizes: the default geometry (used by tests
marked ``slow``) and a reduced grid with helicities -5..5 for the regular run.
"""

import os
import sys

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbita.config import OpticalConfig
from orbita.optics import response_matrix
from orbita.states import make_state

FAST_OPTICS = {
    "radial_samples": 1024,
    "frequency_samples": 256,
    "helicity_range": (-5, 5),
}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs the default optical geometry or a full pipeline")


@pytest.fixture
def default_optics():
    """Default bench geometry (helicities -15..15)."""
    return OpticalConfig()


@pytest.fixture
def fast_optics():
    """Reduced bench: coarser grids and helicities -5..5."""
    return OpticalConfig(**FAST_OPTICS)


@pytest.fixture(scope="session")
def fast_response():
    """Response matrix of the reduced bench, computed once per session."""
    return response_matrix(OpticalConfig(**FAST_OPTICS))


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(20240917)


@pytest.fixture
def von_mises_state():
    """von Mises state with alpha = 0.5 (kappa = 1)."""
    return make_state("vonMises", 0.5)


@pytest.fixture
def wedge_state():
    """Half-circle wedge, alpha = pi."""
    return make_state("wedge", np.pi)


@pytest.fixture
def random_state_factory(rng):
    """Builds random normalized coefficient arrays on [-M, M]."""
    def factory(truncation: int = 32) -> np.ndarray:
        size = 2 * truncation + 1
        raw = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        return raw / np.linalg.norm(raw)
    return factory
