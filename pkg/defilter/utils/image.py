#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Image value type, Euclidean metric, quality metrics and PNG/PFM file I/O.
"""

import os
import re
import logging

import numpy as np
from PIL import Image as PILImage

from defilter.exceptions import DimensionError, ImageIOError, NumericsError, ParamError

logger = logging.getLogger(__name__)

# List of supported image extensions
SUPPORTED_EXTENSIONS = ('.png', '.pfm')

PSNR_CAP = 99.0

# 'pfm' is lossless: standard single precision when exact, else the 64-bit variant
FORMATS = ('png', 'pfm', 'pfm32', 'pfm64')
_PFM_PRECISION = {'pfm': 'auto', 'pfm32': 'single', 'pfm64': 'double'}

_PFM_TAGS = {
    b'Pf': (1, 'f4'),
    b'PF': (3, 'f4'),
    b'Pd': (1, 'f8'),
    b'PD': (3, 'f8'),
}


class Image:
    """Immutable H x W x C buffer of real intensities.

    Intensities are double precision, nominally in [0, 1] but never clamped.

    Args:
        data (array-like): Array of shape (H, W) or (H, W, C) with C in {1, 3}
    """

    __slots__ = ('_data',)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ParamError(f"Image data must be HxW or HxWxC with C in (1, 3), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParamError(f"Image must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericsError("Image data contains NaN or Inf")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def constant(cls, height, width, channels=1, value=0.0):
        """Create an image filled with a single value."""
        return cls(np.full((height, width, channels), float(value)))

    @property
    def data(self):
        """Read-only (H, W, C) float64 array."""
        return self._data

    @property
    def height(self):
        return self._data.shape[0]

    @property
    def width(self):
        return self._data.shape[1]

    @property
    def channels(self):
        return self._data.shape[2]

    @property
    def shape(self):
        return self._data.shape

    def array(self):
        """Return a writable copy of the pixel data."""
        return self._data.copy()

    def is_compatible(self, other):
        """Two images are metric-compatible iff all three dimensions match."""
        return self.shape == other.shape

    def __repr__(self):
        return f"Image(height={self.height}, width={self.width}, channels={self.channels})"


def as_image(value):
    """Wrap an array as an Image; Images pass through unchanged."""
    if isinstance(value, Image):
        return value
    return Image(value)


def _check_compatible(a, b):
    if not a.is_compatible(b):
        raise DimensionError(f"Images are not metric-compatible: {a.shape} vs {b.shape}")


def distance(a, b):
    """Euclidean distance between two images.

    Args:
        a (Image): First image
        b (Image): Second image

    Returns:
        float: sqrt(sum((a - b)^2)) over all samples
    """
    a, b = as_image(a), as_image(b)
    _check_compatible(a, b)
    return float(np.sqrt(np.sum(np.square(a.data - b.data))))


def mse(reference, test):
    """Mean squared error over all samples and channels jointly."""
    reference, test = as_image(reference), as_image(test)
    _check_compatible(reference, test)
    return float(np.mean(np.square(reference.data - test.data)))


def psnr(reference, test):
    """Peak signal-to-noise ratio with peak 1.0.

    Args:
        reference (Image): Reference image, nominally in [0, 1]
        test (Image): Image under evaluation

    Returns:
        float: PSNR in dB, capped at PSNR_CAP (identical images report the cap)
    """
    error = mse(reference, test)
    return psnr_from_mse(error)


def psnr_from_mse(error):
    """Convert an MSE value to capped PSNR in dB."""
    if error <= 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(1.0 / error)))


def infer_format(path):
    """Guess the image format from a file extension."""
    ext = os.path.splitext(path)[1].lower()
    if ext == '.png':
        return 'png'
    if ext == '.pfm':
        return 'pfm'
    raise ImageIOError(f"Cannot infer image format from extension of {path}")


def load_image(path, format=None):
    """Load an image from disk.

    Args:
        path (str): Path to the image file
        format (str, optional): 'png', 'pfm', 'pfm32' or 'pfm64'; inferred from the
            extension when omitted. PFM variants are detected from the header.

    Returns:
        Image: Decoded image (PNG samples scaled by 1/255)
    """
    fmt = format or infer_format(path)
    if fmt not in FORMATS:
        raise ImageIOError(f"Unsupported image format: {fmt}")
    if not os.path.isfile(path):
        raise ImageIOError(f"File not found: {path}")

    if fmt == 'png':
        image = _load_png(path)
    else:
        image = _load_pfm(path)
    logger.debug(f"Loaded {image!r} from {path}")
    return image


def save_image(image, path, format=None):
    """Save an image to disk.

    Args:
        image (Image): Image to save
        path (str): Destination path
        format (str, optional): 'png', 'pfm', 'pfm32' or 'pfm64'; inferred from the
            extension when omitted

    Returns:
        str: Path to the written file
    """
    image = as_image(image)
    fmt = format or infer_format(path)
    if fmt not in FORMATS:
        raise ImageIOError(f"Unsupported image format: {fmt}")

    # Create directory if it doesn't exist
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)

    try:
        if fmt == 'png':
            _save_png(image, path)
        else:
            _save_pfm(image, path, _PFM_PRECISION[fmt])
    except OSError as e:
        raise ImageIOError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Saved {image!r} to {path} as {fmt}")
    return path


def _load_png(path):
    try:
        with PILImage.open(path) as img:
            img.load()
            mode = img.mode
            if img.format != 'PNG':
                raise ImageIOError(f"Not a PNG file: {path}")
            if mode in ('I', 'I;16', 'I;16B', 'I;16L', 'F'):
                raise ImageIOError(f"Unsupported bit depth ({mode}) in {path}; only 8-bit PNG is supported")
            if mode == '1':
                img = img.convert('L')
            elif mode in ('LA', 'P', 'RGBA'):
                logger.warning(f"Converting {mode} PNG {path} to {'L' if mode == 'LA' else 'RGB'}; alpha is dropped")
                img = img.convert('L' if mode == 'LA' else 'RGB')
            elif mode not in ('L', 'RGB'):
                raise ImageIOError(f"Unsupported PNG mode {mode} in {path}")
            arr = np.asarray(img, dtype=np.float64) / 255.0
    except ImageIOError:
        raise
    except Exception as e:
        raise ImageIOError(f"Cannot read PNG {path}: {e}") from e
    return Image(arr)


def _save_png(image, path):
    quantized = np.rint(np.clip(image.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    if image.channels == 1:
        img = PILImage.fromarray(np.ascontiguousarray(quantized[:, :, 0]))
    else:
        img = PILImage.fromarray(quantized)
    img.save(path, format='PNG')


def _load_pfm(path):
    with open(path, 'rb') as f:
        tag = f.readline().strip()
        if tag not in _PFM_TAGS:
            raise ImageIOError(f"Not a PFM file (bad tag {tag!r}): {path}")
        channels, sample = _PFM_TAGS[tag]

        dims = f.readline().decode('latin-1')
        dim_match = re.match(r'^\s*(\d+)\s+(\d+)\s*$', dims)
        if not dim_match:
            raise ImageIOError(f"Malformed PFM header (dimensions) in {path}")
        width, height = map(int, dim_match.groups())

        try:
            scale = float(f.readline().decode('latin-1').strip())
        except ValueError as e:
            raise ImageIOError(f"Malformed PFM header (scale) in {path}") from e
        if scale == 0.0:
            raise ImageIOError(f"Malformed PFM header (zero scale) in {path}")
        endian = '<' if scale < 0 else '>'

        count = width * height * channels
        buf = f.read()

    itemsize = int(sample[1])
    if len(buf) < count * itemsize:
        raise ImageIOError(f"Truncated PFM data in {path}: expected {count} samples")
    data = np.frombuffer(buf, dtype=endian + sample, count=count).astype(np.float64)
    data = data.reshape((height, width, channels))
    # rows are stored bottom-to-top
    return Image(np.flipud(data))


def _save_pfm(image, path, precision='auto'):
    data = np.flipud(image.data)
    if precision == 'auto':
        precision = 'single' if np.array_equal(data.astype(np.float32), data) else 'double'
    channels = image.channels
    if precision == 'double':
        tag = 'PD' if channels == 3 else 'Pd'
        dtype = '<f8'
    else:
        tag = 'PF' if channels == 3 else 'Pf'
        dtype = '<f4'
    payload = np.ascontiguousarray(data).astype(dtype)
    with open(path, 'wb') as f:
        f.write(f"{tag}\n{image.width} {image.height}\n-1.0\n".encode('ascii'))
        f.write(payload.tobytes())


def is_valid_image(file_path):
    """Check if a file is a readable PNG or PFM image.

    Args:
        file_path (str): Path to the file

    Returns:
        bool: True if the file is a valid image, False otherwise
    """
    if not os.path.isfile(file_path):
        return False

    # Check file extension
    if not file_path.lower().endswith(SUPPORTED_EXTENSIONS):
        return False

    try:
        load_image(file_path)
        return True
    except Exception as e:
        logger.debug(f"Invalid image file {file_path}: {str(e)}")
        return False


def find_images_in_directory(directory_path, recursive=False):
    """Find all valid image files in a directory, sorted by path.

    Args:
        directory_path (str): Path to the directory
        recursive (bool): Whether to search recursively

    Returns:
        list: Sorted list of paths to valid image files
    """
    if not os.path.isdir(directory_path):
        logger.error(f"Directory does not exist: {directory_path}")
        return []

    image_paths = []

    if recursive:
        for root, _, files in os.walk(directory_path):
            for file in files:
                file_path = os.path.join(root, file)
                if is_valid_image(file_path):
                    image_paths.append(file_path)
    else:
        for file in os.listdir(directory_path):
            file_path = os.path.join(directory_path, file)
            if is_valid_image(file_path):
                image_paths.append(file_path)

    image_paths.sort()
    logger.info(f"Found {len(image_paths)} valid images in {directory_path}")
    return image_paths
