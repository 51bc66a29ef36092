"""
Shared fixtures: deterministic synthetic test images and helpers.
"""

import logging
import os

import numpy as np
import pytest
from scipy import ndimage

from defilter.utils.image import Image, save_image

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def make_desk_image(seed, size=128, channels=1, components=8, max_cycles=10, detail=0.0,
                    edges=0, edge_blur=1.0):
    """Band-limited image: a sum of periodic sinusoids in [0.1, 0.9].

    detail > 0 adds three fixed mid-frequency sinusoids of that amplitude
    (6.5 to 7.5 pixels per cycle on a 128 grid). edges > 0 adds that many
    axis-aligned rectangles (wrapping at the border) whose outlines are
    softened by a periodic Gaussian of width edge_blur.
    """
    rng = np.random.RandomState(seed)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing='ij')
    data = np.zeros((size, size, channels))
    for c in range(channels):
        plane = np.zeros((size, size))
        for _ in range(components):
            ky, kx = rng.randint(-max_cycles, max_cycles + 1, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            amplitude = rng.uniform(0.2, 1.0)
            plane += amplitude * np.cos(2 * np.pi * (ky * yy + kx * xx) / size + phase)
        plane -= plane.min()
        plane /= plane.max()
        if edges:
            shapes = np.zeros((size, size))
            for _ in range(edges):
                top, left = rng.randint(0, size, size=2)
                height, width = rng.randint(size // 8, size // 2, size=2)
                rows = np.arange(top, top + height) % size
                cols = np.arange(left, left + width) % size
                shapes[np.ix_(rows, cols)] += rng.choice([-1.0, 1.0]) * rng.uniform(0.08, 0.25)
            plane += ndimage.gaussian_filter(shapes, edge_blur, mode='wrap')
            plane -= plane.min()
            plane /= plane.max()
        data[:, :, c] = 0.1 + 0.8 * plane
        if detail:
            for ky, kx in ((12, 13), (15, 10), (14, -14)):
                phase = rng.uniform(0, 2 * np.pi)
                data[:, :, c] += detail * np.cos(2 * np.pi * (ky * yy + kx * xx) / size + phase)
    return Image(data)


def make_noise_image(seed, size=32, channels=1):
    rng = np.random.RandomState(seed)
    return Image(rng.uniform(0.0, 1.0, size=(size, size, channels)))


@pytest.fixture
def desk_images():
    """Three 128x128 grayscale images with smooth shading and soft edges."""
    return [make_desk_image(seed, detail=0.01, edges=6) for seed in (1, 2, 3)]


@pytest.fixture
def desk_image():
    return make_desk_image(7, edges=6)


@pytest.fixture
def color_image():
    return make_desk_image(11, size=32, channels=3, max_cycles=3)


@pytest.fixture
def small_image():
    return make_desk_image(5, size=16, max_cycles=2)


@pytest.fixture
def noise_images():
    return [make_noise_image(seed) for seed in (21, 22, 23)]


@pytest.fixture
def image_dir(tmp_path):
    """Folder with three 32x32 smooth images saved as 64-bit PFM."""
    folder = tmp_path / "images"
    folder.mkdir()
    for seed in (1, 2, 3):
        save_image(make_desk_image(seed, size=32, max_cycles=3), str(folder / f"desk_{seed}.pfm"), 'pfm64')
    return folder


@pytest.fixture
def cli_env(monkeypatch, tmp_path):
    """Make `python -m defilter` importable from child processes and isolate config."""
    existing = os.environ.get('PYTHONPATH')
    monkeypatch.setenv('PYTHONPATH', REPO_ROOT + (os.pathsep + existing if existing else ''))
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture(autouse=True)
def restore_root_logging():
    """The CLI replaces root handlers; put the originals back after each test."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers[:]:
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)
