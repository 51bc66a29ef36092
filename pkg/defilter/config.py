#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Configuration management for defilter.

Settings live in a JSON file (default ~/.defilter_config.json) that is deep
merged over DEFAULT_CONFIG. Command-line flags take precedence over both.
"""

import os
import copy
import json
import logging

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "~/.defilter_config.json"

DEFAULT_CONFIG = {
    "reverse": {
        "iterations": 10,
        "patience": 5,
    },
    "bench": {
        "iterations": 50,
        "parallel_jobs": None,  # Auto-detect CPU count
        "use_cache": True,
        "cache_dir": ".cache",
        "cache_max_age_days": 30,
        "dump_traces": False,
    },
    "external": {
        "timeout_seconds": 60,
        "format": "pfm",
    },
    "analysis": {
        "max_dense_dimension": 4096,
        "marginal_tolerance": 1e-6,
    },
    "sr": {
        "scale": 2,
        "iterations": 10,
        "up_method": "bicubic",
    },
    "deconv": {
        "iterations": 30,
    },
    "filters": {
        "gaussian_default_support": None,  # odd(6 sigma + 1)
    },
}


def _positive_int(value):
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


def _positive_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


def _optional(check):
    return lambda value: value is None or check(value)


def _odd_support(value):
    return _positive_int(value) and value >= 3 and value % 2 == 1


# Keys whose values are range-checked after loading; anything else is taken as is
CONFIG_CHECKS = {
    'reverse.iterations': (_positive_int, "a positive integer"),
    'reverse.patience': (_positive_int, "a positive integer"),
    'bench.iterations': (_positive_int, "a positive integer"),
    'bench.parallel_jobs': (_optional(_positive_int), "null or a positive integer"),
    'bench.cache_max_age_days': (_positive_number, "a positive number"),
    'external.timeout_seconds': (_positive_number, "a positive number of seconds"),
    'external.format': (lambda v: v in ('pfm', 'pfm32', 'pfm64', 'png'), "one of pfm, pfm32, pfm64, png"),
    'analysis.max_dense_dimension': (_positive_int, "a positive integer"),
    'analysis.marginal_tolerance': (lambda v: _positive_number(v) and v < 1, "a number in (0, 1)"),
    'sr.scale': (_positive_int, "a positive integer"),
    'sr.iterations': (_positive_int, "a positive integer"),
    'deconv.iterations': (_positive_int, "a positive integer"),
    'filters.gaussian_default_support': (_optional(_odd_support), "null or an odd integer >= 3"),
}

_MISSING = object()


class ConfigManager:
    """Dotted-key access to the merged defilter configuration.

    Args:
        config_path (str, optional): JSON file to load; defaults to
            ~/.defilter_config.json. A missing file means pure defaults.
    """

    def __init__(self, config_path=None):
        self.config_path = config_path or os.path.expanduser(DEFAULT_CONFIG_PATH)
        self.config = self._load_config()

    def _load_config(self):
        config = copy.deepcopy(DEFAULT_CONFIG)
        if not os.path.exists(self.config_path):
            logger.debug(f"No configuration file at {self.config_path}, using defaults")
            return config

        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                overrides = json.load(f)
        except (OSError, ValueError) as e:
            logger.error(f"Cannot read configuration {self.config_path}: {e}")
            logger.warning("Using default configuration")
            return config

        if not isinstance(overrides, dict):
            logger.warning(f"Configuration in {self.config_path} is not a JSON object; using defaults")
            return config

        self._deep_update(config, overrides)
        self.config = config
        self.validate()
        logger.info(f"Loaded configuration from {self.config_path}")
        return self.config

    def _deep_update(self, target, source):
        for key, value in source.items():
            if isinstance(target.get(key), dict) and isinstance(value, dict):
                self._deep_update(target[key], value)
            else:
                target[key] = value

    def validate(self):
        """Reset out-of-range values to their defaults.

        Returns:
            list: Dotted keys that were reset
        """
        reset = []
        for key, (check, expected) in CONFIG_CHECKS.items():
            value = self.get(key, _MISSING)
            if value is _MISSING or check(value):
                continue
            default = self._default(key)
            logger.warning(f"Config value {key}={value!r} must be {expected}; using {default!r}")
            self.set(key, default)
            reset.append(key)
        return reset

    @staticmethod
    def _default(key):
        value = DEFAULT_CONFIG
        for part in key.split('.'):
            value = value[part]
        return value

    def save_config(self, config_path=None):
        """Write the current configuration as JSON.

        Args:
            config_path (str, optional): Target file; defaults to config_path

        Returns:
            bool: True if the file was written
        """
        save_path = config_path or self.config_path
        try:
            os.makedirs(os.path.dirname(os.path.abspath(save_path)), exist_ok=True)
            with open(save_path, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=2)
        except OSError as e:
            logger.error(f"Cannot save configuration to {save_path}: {e}")
            return False
        logger.info(f"Saved configuration to {save_path}")
        return True

    def get(self, key, default=None):
        """Look up a dotted key such as 'bench.iterations'."""
        value = self.config
        for part in key.split('.'):
            if not isinstance(value, dict):
                return default
            value = value.get(part, _MISSING)
            if value is _MISSING:
                return default
        return value

    def set(self, key, value):
        """Assign a dotted key, creating missing sections.

        Returns:
            bool: False when a path component is an existing non-section value
        """
        *sections, leaf = key.split('.')
        node = self.config
        for part in sections:
            if part not in node:
                node[part] = {}
            elif not isinstance(node[part], dict):
                logger.error(f"Cannot set '{key}': '{part}' is not a section")
                return False
            node = node[part]
        node[leaf] = value
        return True

    def get_cache_settings(self):
        """Bench cache settings as keyword arguments for the CLI."""
        return {
            'enabled': self.get('bench.use_cache', True),
            'cache_dir': self.get('bench.cache_dir', '.cache'),
            'max_age_days': self.get('bench.cache_max_age_days', 30),
        }

    def reset_to_defaults(self):
        self.config = copy.deepcopy(DEFAULT_CONFIG)
        logger.info("Reset configuration to defaults")
        return True
