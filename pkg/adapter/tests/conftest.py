"""Deterministic synthetic stimulus images."""

import os

import numpy as np
import pytest
from PIL import Image


def make_images(dirname, count=5, size=64, seed=0, prefix="img"):
    os.makedirs(dirname, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for i in range(count):
        arr = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
        name = f"{prefix}{i}.png"
        Image.fromarray(arr, "RGB").save(os.path.join(dirname, name))
        names.append(name)
    return names


@pytest.fixture
def image_dir(tmp_path):
    d = str(tmp_path / "imgs")
    make_images(d)
    return d
