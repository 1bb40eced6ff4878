import numpy as np
import pytest

from retinasim import generate_synthetic


def make_rng(seed: int = 0) -> np.random.Generator:
    """Counter-based generator, independent per seed — the same family the
    package uses internally, so test draws never alias package draws."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@pytest.fixture
def rng():
    return make_rng(20260816)


@pytest.fixture(scope="session")
def default_map():
    """Canonical 100x100 synthetic map shared by read-only tests."""
    return generate_synthetic(100, 100, 0.02, 0.18, seed=7)
