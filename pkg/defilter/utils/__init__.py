"""
Utility modules for defilter.
"""

from .image import (
    Image,
    as_image,
    distance,
    mse,
    psnr,
    psnr_from_mse,
    load_image,
    save_image,
    is_valid_image,
    find_images_in_directory,
)
from .cache import CacheManager
