import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, n_in=None, n_out=None, conc=1.0):
    """Random admissible pair with alphabets of size 2..4."""
    from contractkit import admissible

    n_in = n_in or int(rng.integers(2, 5))
    n_out = n_out or int(rng.integers(2, 5))
    mu = rng.dirichlet(np.full(n_in, conc))
    mu = np.clip(mu, 1e-3, None)
    mu /= mu.sum()
    k = rng.dirichlet(np.full(n_out, conc), size=n_in)
    return admissible(mu, k)
