import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tubegen import BinaryMask, Image


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def flat_image():
    return Image(np.full((64, 64), 0.3))


@pytest.fixture
def bar_mask():
    m = np.zeros((64, 64), dtype=np.uint8)
    m[30:35, :] = 1
    return BinaryMask(m)


def random_mask(gen, shape, density=0.4):
    m = (gen.random(shape) < density).astype(np.uint8)
    if not m.any():
        m[shape[0] // 2, shape[1] // 2] = 1
    return BinaryMask(m)
