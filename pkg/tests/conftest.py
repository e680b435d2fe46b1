import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from syncontrast.mathops import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


def random_unit(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unit_rows(rng, n, d):
    m = rng.normal(size=(n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)
