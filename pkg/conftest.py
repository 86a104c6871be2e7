"""Shared fixtures for the test suite."""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.core_model import UnitSystem, circular_two_body
from src.evaluation import escape_setup


@pytest.fixture
def natural_units():
    """λ_c = 1."""
    return UnitSystem.natural()


@pytest.fixture
def circular_orbit(natural_units):
    """Circular two-body orbit, r = 20, g = 0.5."""
    return circular_two_body(20.0, 0.5, natural_units)


@pytest.fixture(scope="session")
def escape():
    """Receding pair (ρ = 5, T_inf = 1e-4, g = 5) and its L0 dynamics with L0(0) = 100."""
    return escape_setup()
