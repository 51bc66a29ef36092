#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
On-disk cache of per-image bench results.

A bench job is identified by the image file it reads and the job parameters
(filter spec strings, iteration count). The image part of the fingerprint is
(absolute path, mtime, size), so touching or rewriting an image invalidates
every entry made from it.
"""

import os
import time
import pickle
import hashlib
import logging

logger = logging.getLogger(__name__)

CACHE_SUFFIX = ".pkl"
# Bumped whenever the layout of a stored bench result changes
CACHE_SCHEMA = 2
SECONDS_PER_DAY = 86400


def image_fingerprint(image_path):
    """Identity of an image file as (absolute path, mtime, size)."""
    stat = os.stat(image_path)
    return os.path.abspath(image_path), repr(stat.st_mtime), str(stat.st_size)


class CacheManager:
    """Pickle store of bench results, one file per (image, job) pair.

    Args:
        cache_dir (str): Directory holding the entries, created if missing
        max_age_days (float): Entries older than this are ignored and
            removed by clear_cache()
    """

    def __init__(self, cache_dir=".cache", max_age_days=30):
        self.cache_dir = cache_dir
        self.max_age_days = max_age_days
        os.makedirs(cache_dir, exist_ok=True)

    def get_cache_key(self, image_path, *params):
        """Hex digest over the image fingerprint, the job parameters and the schema."""
        parts = [f"schema={CACHE_SCHEMA}", *image_fingerprint(image_path), *(str(p) for p in params)]
        return hashlib.md5("|".join(parts).encode('utf-8')).hexdigest()

    def get_cache_path(self, cache_key):
        return os.path.join(self.cache_dir, cache_key + CACHE_SUFFIX)

    def _age_days(self, path):
        return (time.time() - os.path.getmtime(path)) / SECONDS_PER_DAY

    def get_cached_result(self, image_path, *params):
        """Look up the result of a finished bench job.

        Args:
            image_path (str): Image the job ran on
            *params: Job parameters, as passed to store_result()

        Returns:
            object or None: The stored result, or None when there is no fresh
            entry (missing, expired, unreadable or image gone)
        """
        try:
            entry = self.get_cache_path(self.get_cache_key(image_path, *params))
            if not os.path.exists(entry):
                return None
            if self._age_days(entry) > self.max_age_days:
                logger.debug(f"Cache entry for {image_path} is older than {self.max_age_days} days")
                return None
            with open(entry, 'rb') as f:
                result = pickle.load(f)
        except (OSError, pickle.UnpicklingError, EOFError) as e:
            logger.warning(f"Ignoring unreadable cache entry for {image_path}: {e}")
            return None

        logger.debug(f"Cache hit for {image_path} ({', '.join(str(p) for p in params)})")
        return result

    def store_result(self, image_path, result, *params):
        """Persist a bench result; returns True when the entry was written."""
        try:
            entry = self.get_cache_path(self.get_cache_key(image_path, *params))
            tmp_path = entry + ".tmp"
            with open(tmp_path, 'wb') as f:
                pickle.dump(result, f, protocol=pickle.HIGHEST_PROTOCOL)
            os.replace(tmp_path, entry)
        except (OSError, pickle.PicklingError) as e:
            logger.warning(f"Could not cache result for {image_path}: {e}")
            return False
        return True

    def clear_cache(self, max_age_days=None):
        """Delete entries older than max_age_days (default: the instance's limit).

        Returns:
            int: Number of entries removed
        """
        limit = self.max_age_days if max_age_days is None else max_age_days
        removed = 0
        try:
            for name in os.listdir(self.cache_dir):
                path = os.path.join(self.cache_dir, name)
                if name.endswith(CACHE_SUFFIX) and os.path.isfile(path) and self._age_days(path) > limit:
                    os.remove(path)
                    removed += 1
        except OSError as e:
            logger.warning(f"Error clearing cache in {self.cache_dir}: {e}")
        logger.info(f"Removed {removed} expired bench cache entries")
        return removed
