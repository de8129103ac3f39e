import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_psd(rng, n, scale=1.0, jitter=1e-6):
    """Random symmetric positive-definite matrix."""
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T) + jitter * np.eye(n)
