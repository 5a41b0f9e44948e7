import numpy as np
import pytest

from src.config import settings


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def reset_settings():
    """Every test starts from environment defaults."""
    settings.reset()
    yield
    settings.reset()
