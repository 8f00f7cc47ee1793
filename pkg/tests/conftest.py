import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from palette_quant.core.histogram import build_histogram
from palette_quant.imaging.imageio import RawImage


def make_gradient_image(width: int, height: int, seed: int = 0, noise: float = 12.0) -> RawImage:
    """Smooth RGB gradients plus noise; enough distinct colors for clustering tests."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    r = 255.0 * x / max(1, width - 1)
    g = 255.0 * y / max(1, height - 1)
    b = 127.5 + 127.5 * np.sin((x + y) / 7.0)
    grid = np.stack([r, g, b], axis=-1) + rng.normal(0.0, noise, size=(height, width, 3))
    return RawImage.from_array(np.clip(np.rint(grid), 0, 255).astype(np.uint8))


@pytest.fixture
def gradient_image():
    return make_gradient_image(48, 40)


@pytest.fixture
def small_image():
    return make_gradient_image(16, 12, seed=3)


@pytest.fixture
def gradient_hist(gradient_image):
    return build_histogram(gradient_image.pixels, seed=0)


@pytest.fixture
def temp_dirs():
    base = Path(tempfile.mkdtemp())
    images = base / "images"
    out = base / "out"
    images.mkdir()
    out.mkdir()
    yield {"base": base, "images": images, "out": out}
    shutil.rmtree(base)


@pytest.fixture
def image_factory():
    return make_gradient_image
