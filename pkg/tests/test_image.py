import numpy as np
import pytest
from PIL import Image as PILImage

from defilter.exceptions import DimensionError, ImageIOError, NumericsError, ParamError
from defilter.utils.image import (
    PSNR_CAP, Image, distance, find_images_in_directory, infer_format, is_valid_image,
    load_image, mse, psnr, psnr_from_mse, save_image
)


def test_image_promotes_2d_and_is_read_only():
    image = Image(np.zeros((4, 5)))
    assert image.shape == (4, 5, 1)
    assert (image.height, image.width, image.channels) == (4, 5, 1)
    with pytest.raises(ValueError):
        image.data[0, 0, 0] = 1.0
    copy = image.array()
    copy[0, 0, 0] = 1.0
    assert image.data[0, 0, 0] == 0.0


def test_image_rejects_bad_channel_count_and_non_finite():
    with pytest.raises(ParamError):
        Image(np.zeros((4, 4, 2)))
    with pytest.raises(NumericsError):
        Image(np.array([[0.0, np.nan]]))


def test_image_values_are_not_clamped():
    image = Image(np.array([[-0.5, 1.5]]))
    assert image.data.min() == -0.5
    assert image.data.max() == 1.5


def test_distance_and_mse():
    a = Image.constant(2, 2, value=0.0)
    b = Image.constant(2, 2, value=0.5)
    assert distance(a, b) == pytest.approx(1.0)
    assert mse(a, b) == pytest.approx(0.25)


def test_psnr_known_value_and_cap():
    a = Image.constant(4, 4, value=0.0)
    b = Image.constant(4, 4, value=0.1)
    assert psnr(a, b) == pytest.approx(20.0)
    assert psnr(a, a) == PSNR_CAP
    assert psnr_from_mse(0.0) == PSNR_CAP


def test_psnr_of_small_uniform_difference():
    a = Image.constant(8, 8, channels=3, value=0.5)
    b = Image.constant(8, 8, channels=3, value=0.51)
    assert psnr(a, b) == pytest.approx(40.0)


def test_distance_is_a_metric():
    rng = np.random.RandomState(11)
    for _ in range(20):
        x, y, z = (Image(rng.rand(6, 5, 3)) for _ in range(3))
        assert distance(x, y) >= 0.0
        assert distance(x, x) == 0.0
        assert distance(x, y) == distance(y, x)
        assert distance(x, z) <= (distance(x, y) + distance(y, z)) * (1 + 1e-9)


def test_psnr_decreases_as_error_grows():
    rng = np.random.RandomState(12)
    reference = Image(rng.rand(8, 8))
    direction = rng.randn(8, 8)
    scores = [psnr(reference, Image(reference.data[:, :, 0] + scale * direction))
              for scale in (1e-4, 1e-3, 1e-2, 1e-1)]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_metrics_need_matching_dimensions():
    with pytest.raises(DimensionError):
        mse(Image.constant(2, 2), Image.constant(2, 3))
    with pytest.raises(DimensionError):
        distance(Image.constant(2, 2), Image.constant(2, 2, channels=3))


def test_pfm64_round_trip_is_bit_exact(tmp_path, color_image):
    path = str(tmp_path / "exact.pfm")
    save_image(color_image, path, 'pfm64')
    loaded = load_image(path)
    assert np.array_equal(loaded.data, color_image.data)


def test_default_pfm_round_trip_is_exact(tmp_path, small_image):
    path = str(tmp_path / "exact.pfm")
    save_image(small_image, path)
    loaded = load_image(path)
    assert np.array_equal(loaded.data, small_image.data)
    with open(path, 'rb') as f:
        assert f.readline().strip() == b'Pd'


def test_default_pfm_uses_standard_tag_when_single_is_exact(tmp_path):
    data = np.random.RandomState(2).rand(5, 6, 3).astype(np.float32).astype(np.float64)
    path = str(tmp_path / "standard.pfm")
    save_image(Image(data), path)
    with open(path, 'rb') as f:
        assert f.readline().strip() == b'PF'
    assert np.array_equal(load_image(path).data, data)


def test_pfm32_stores_single_precision(tmp_path, small_image):
    path = str(tmp_path / "single.pfm")
    save_image(small_image, path, 'pfm32')
    loaded = load_image(path)
    assert np.array_equal(loaded.data, small_image.data.astype(np.float32).astype(np.float64))
    with open(path, 'rb') as f:
        assert f.readline().strip() == b'Pf'

def test_pfm_rows_are_stored_bottom_up(tmp_path):
    image = Image(np.array([[0.0, 0.25], [0.5, 1.0]]))
    path = str(tmp_path / "order.pfm")
    save_image(image, path)
    with open(path, 'rb') as f:
        for _ in range(3):
            f.readline()
        first_row = np.frombuffer(f.read(8), dtype='<f4')
    assert first_row.tolist() == [0.5, 1.0]


def test_png_round_trip_quantizes(tmp_path, color_image):
    path = str(tmp_path / "image.png")
    save_image(color_image, path)
    loaded = load_image(path)
    assert loaded.shape == color_image.shape
    assert np.max(np.abs(loaded.data - color_image.data)) <= 0.5 / 255 + 1e-12


def test_png_clips_out_of_range_values(tmp_path):
    path = str(tmp_path / "clip.png")
    save_image(Image(np.array([[-0.5, 1.5]])), path)
    assert load_image(path).data.ravel().tolist() == [0.0, 1.0]


def test_malformed_pfm_raises(tmp_path):
    path = tmp_path / "bad.pfm"
    path.write_bytes(b"PF\n4 4\n-1.0\n" + b"\x00" * 10)
    with pytest.raises(ImageIOError):
        load_image(str(path))
    path.write_bytes(b"P6\n4 4\n255\n")
    with pytest.raises(ImageIOError):
        load_image(str(path))


def test_missing_file_and_unknown_extension(tmp_path):
    with pytest.raises(ImageIOError):
        load_image(str(tmp_path / "missing.png"))
    with pytest.raises(ImageIOError):
        infer_format("picture.jpg")


def test_find_images_in_directory_is_sorted(tmp_path, small_image):
    for name in ("b.pfm", "a.png", "c.txt"):
        if name.endswith('.txt'):
            (tmp_path / name).write_text("not an image")
        else:
            save_image(small_image, str(tmp_path / name))
    found = find_images_in_directory(str(tmp_path))
    assert [p.rsplit('/', 1)[-1] for p in found] == ["a.png", "b.pfm"]
    assert is_valid_image(found[0])
    assert not is_valid_image(str(tmp_path / "c.txt"))


def test_sixteen_bit_png_is_rejected(tmp_path):
    path = str(tmp_path / "deep.png")
    PILImage.fromarray(np.full((4, 4), 40000, dtype=np.uint16)).save(path)
    with pytest.raises(ImageIOError):
        load_image(path)
