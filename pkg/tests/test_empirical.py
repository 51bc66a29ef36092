import logging
import warnings

import numpy as np
import pytest

from defilter.analysis import contraction_ratio, empirical_contraction, sample_patch_pairs
from defilter.exceptions import DimensionError, ParamError
from defilter.utils.image import Image

from conftest import make_desk_image, make_noise_image


def half(image):
    return Image(0.5 * image.data)


def test_linear_ratios_are_exact(noise_images):
    pairs = list(zip(noise_images, noise_images[1:]))
    identity_stats = empirical_contraction("identity", pairs)
    assert identity_stats.max == pytest.approx(0.0, abs=1e-12)
    assert identity_stats.fraction_below_1 == 1.0

    half_stats = empirical_contraction(half, pairs)
    assert half_stats.samples == 2
    assert all(r == pytest.approx(0.5, abs=1e-12) for r in half_stats.ratios)
    assert half_stats.mean == pytest.approx(0.5, abs=1e-12)


def test_identical_pairs_are_skipped(noise_images, caplog):
    a, b = noise_images[:2]
    with caplog.at_level(logging.WARNING):
        stats = empirical_contraction(half, [(a, a), (a, b)])
    assert stats.skipped == 1
    assert stats.samples == 1
    assert "identical" in caplog.text

    with pytest.raises(ParamError):
        empirical_contraction(half, [(a, a)])
    assert contraction_ratio(half, a, a) is None


def test_mismatched_pair_raises(noise_images):
    with pytest.raises(DimensionError):
        empirical_contraction(half, [(noise_images[0], Image.constant(8, 8))])


def test_bilateral_on_natural_patches():
    images = [make_desk_image(seed, size=64, max_cycles=12) for seed in (1, 2)]
    pairs = sample_patch_pairs(images, patch_size=32, n_pairs=20, random_state=0)
    stats = empirical_contraction("bilateral:sigma_s=3,sigma_r=0.1", pairs)
    assert stats.samples == 20
    assert stats.max >= stats.mean > 0.0
    if stats.max >= 1.0:
        warnings.warn(f"bilateral exceeded unit contraction ratio on sampled patches: max {stats.max:.4f}")
    assert 0.0 <= stats.fraction_below_1 <= 1.0
    assert set(stats.to_dict()) >= {'samples', 'max', 'mean', 'fraction_below_1', 'ratios'}


def test_sample_patch_pairs_is_reproducible():
    images = [make_noise_image(seed, size=24, channels=3) for seed in (1, 2)]
    first = sample_patch_pairs(images, patch_size=8, n_pairs=5, random_state=42)
    second = sample_patch_pairs(images, patch_size=8, n_pairs=5, random_state=42)
    assert len(first) == 5
    for (a1, b1), (a2, b2) in zip(first, second):
        assert a1.shape == (8, 8, 3)
        assert np.array_equal(a1.data, a2.data)
        assert np.array_equal(b1.data, b2.data)
        assert not np.array_equal(a1.data, b1.data)


def test_sample_patch_pairs_validation():
    image = make_noise_image(1, size=16)
    with pytest.raises(ParamError):
        sample_patch_pairs([image], patch_size=32)
    with pytest.raises(ParamError):
        sample_patch_pairs([], patch_size=4)
    with pytest.raises(ParamError):
        sample_patch_pairs([image], patch_size=4, n_pairs=0)
    with pytest.raises(ParamError):
        sample_patch_pairs([Image.constant(4, 4)], patch_size=4, n_pairs=1)
