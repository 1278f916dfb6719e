"""Shared fixtures: src/ on the path, small grids and seeded states"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from initial_data import InitialDataSpec, generate_initial_data  # noqa: E402
from spectral_core import build_grid  # noqa: E402


@pytest.fixture
def grid8():
    return build_grid(2.0 * np.pi, 8, np.pi, 8)


@pytest.fixture
def grid16():
    return build_grid(2.0 * np.pi, 16, np.pi, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_state(grid16):
    """Divergence-free random state with H3 size 1e-2"""
    return generate_initial_data(InitialDataSpec(amplitude=1e-2, seed=11), grid16)


@pytest.fixture
def small_state8(grid8):
    return generate_initial_data(InitialDataSpec(amplitude=1e-2, k0=2.0, seed=3), grid8)
