import os

import numpy as np
import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixture_idx_paths():
    """Paths to the bundled 512-example IDX pair."""
    return (
        os.path.join(FIXTURES, "digits-images.idx.gz"),
        os.path.join(FIXTURES, "digits-labels.idx.gz"),
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(0xC0FFEE)
