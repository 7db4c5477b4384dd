import numpy as np
import pytest

from camfault.raster import ImageBuffer


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_image(rng, width, height):
    return ImageBuffer(rng.integers(0, 256, (height, width, 3), dtype=np.uint8))


@pytest.fixture
def small_image(rng):
    return random_image(rng, 30, 20)
