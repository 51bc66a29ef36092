#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Filter specifications and their string form.

Grammar (whitespace around tokens is ignored):

    spec   = kind [ ":" param { "," param } ]
    param  = key "=" value
    kind   = identity | gaussian | box | disk | conv | bilateral | guided
           | median | gamma | unsharp | downup | tikhonov | external

The value of ``cmd`` (external filters only) runs to the end of the string,
so it may contain commas; it must be the last parameter.

Examples:
    gaussian:sigma=2,support=21
    conv:weights=0.25 0.5 0.25,boundary=symmetric
    external:format=pfm64,cmd=my-tool {IN} {OUT}
"""

import os
import math
import logging
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from defilter.exceptions import FilterError, ParamError, SpecParseError
from defilter.filters import builtin
from defilter.filters.external import (
    EXCHANGE_FORMATS, DEFAULT_TIMEOUT, external_filter, validate_template
)
from defilter.filters.kernels import (
    BOUNDARIES, Kernel, box_kernel, convolve, delta_kernel, default_gaussian_support,
    disk_kernel, gaussian_kernel, unsharp_kernel
)
from defilter.filters.resample import DOWN_METHODS, UP_METHODS, down_up
from defilter.utils.image import as_image

logger = logging.getLogger(__name__)

# kind -> (required parameters, optional parameters with defaults)
_SCHEMA = {
    'identity': ((), {}),
    'gaussian': (('sigma',), {'support': None, 'boundary': 'periodic'}),
    'box': (('radius',), {'boundary': 'periodic'}),
    'disk': (('r',), {'support': None, 'boundary': 'periodic'}),
    'conv': ((), {'weights': None, 'kernel': None, 'anchor': None, 'boundary': 'periodic'}),
    'bilateral': (('sigma_s', 'sigma_r'), {'radius': None}),
    'guided': (('radius', 'eps'), {}),
    'median': (('radius',), {}),
    'gamma': (('gamma',), {}),
    'unsharp': (('lambda', 'sigma'), {'support': None, 'boundary': 'periodic'}),
    'downup': (('scale',), {'down': 'box', 'up': 'bicubic'}),
    'tikhonov': (('lambda',), {}),
    'external': (('cmd',), {'format': 'pfm', 'timeout': DEFAULT_TIMEOUT}),
}

KINDS = tuple(_SCHEMA)

# Kinds whose action is a convolution with a fixed kernel
LINEAR_KINDS = ('identity', 'gaussian', 'box', 'disk', 'conv', 'unsharp')

_INT_PARAMS = ('support', 'radius', 'scale')
_FLOAT_PARAMS = ('sigma', 'r', 'sigma_s', 'sigma_r', 'eps', 'gamma', 'lambda', 'timeout')


def _to_float(name, value):
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ParamError(f"Parameter '{name}' must be a number, got {value!r}")
    if not math.isfinite(number):
        raise ParamError(f"Parameter '{name}' must be finite, got {value!r}")
    return number


def _to_int(name, value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, float) and value.is_integer():
        return int(value)
    try:
        return int(str(value).strip())
    except ValueError:
        raise ParamError(f"Parameter '{name}' must be an integer, got {value!r}")


def _coerce(name, value):
    if value is None:
        return None
    if name in _INT_PARAMS:
        return _to_int(name, value)
    if name in _FLOAT_PARAMS:
        return _to_float(name, value)
    return str(value).strip()


def parse_weights(text):
    """Parse 'a b c/d e f' (rows separated by '/' or ';') into a 2D array."""
    rows = [row.split() for row in text.replace(';', '/').split('/')]
    rows = [row for row in rows if row]
    if not rows:
        raise ParamError("Kernel weights are empty")
    if len({len(row) for row in rows}) != 1:
        raise ParamError(f"Kernel rows have unequal lengths: {text!r}")
    try:
        return np.array([[float(v) for v in row] for row in rows])
    except ValueError:
        raise ParamError(f"Kernel weights must be numbers: {text!r}")


def parse_anchor(text):
    """Parse 'RxC' into a (row, col) tuple."""
    try:
        row, col = text.lower().split('x')
        return int(row), int(col)
    except ValueError:
        raise ParamError(f"Kernel anchor must look like RxC, got {text!r}")


@lru_cache(maxsize=16)
def _load_kernel_file(path):
    if not os.path.isfile(path):
        raise ParamError(f"Kernel file not found: {path}")
    try:
        weights = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise ParamError(f"Cannot parse kernel file {path}: {e}")
    weights.setflags(write=False)
    return weights


@dataclass(frozen=True)
class FilterSpec:
    """A validated filter description.

    Args:
        kind (str): One of KINDS
        params (dict): Parameters; missing optional ones are filled with defaults
    """

    kind: str
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        kind = str(self.kind).strip().lower()
        if kind not in _SCHEMA:
            raise ParamError(f"Unknown filter kind '{self.kind}', expected one of {', '.join(KINDS)}")
        required, optional = _SCHEMA[kind]

        unknown = set(self.params) - set(required) - set(optional)
        if unknown:
            raise ParamError(f"Unknown parameter(s) for {kind}: {', '.join(sorted(unknown))}")
        missing = [name for name in required if self.params.get(name) is None]
        if missing:
            raise ParamError(f"Missing parameter(s) for {kind}: {', '.join(missing)}")

        params = dict(optional)
        for name, value in self.params.items():
            params[name] = _coerce(name, value)
        _validate(kind, params)

        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'params', params)

    def __getitem__(self, name):
        return self.params[name]

    @property
    def is_linear(self):
        return self.kind in LINEAR_KINDS

    def to_string(self):
        """Canonical spec string; parse_filter_spec(s.to_string()) == s."""
        parts = []
        for name, value in self.params.items():
            if value is None or name == 'cmd':
                continue
            parts.append(f"{name}={_format_value(value)}")
        if self.kind == 'external':
            parts.append(f"cmd={self.params['cmd']}")
        return self.kind + (':' + ','.join(parts) if parts else '')

    def __str__(self):
        return self.to_string()


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _validate(kind, params):
    def positive(name):
        if params.get(name) is not None and not params[name] > 0:
            raise ParamError(f"{kind}: '{name}' must be > 0, got {params[name]}")

    for name in ('sigma', 'r', 'sigma_s', 'sigma_r', 'eps', 'gamma', 'timeout'):
        positive(name)
    if params.get('radius') is not None and params['radius'] < 1:
        raise ParamError(f"{kind}: 'radius' must be >= 1, got {params['radius']}")
    support = params.get('support')
    if support is not None and (support < 3 or support % 2 == 0):
        raise ParamError(f"{kind}: 'support' must be an odd integer >= 3, got {support}")
    if 'boundary' in params and params['boundary'] not in BOUNDARIES:
        raise ParamError(f"{kind}: unknown boundary '{params['boundary']}', expected one of {BOUNDARIES}")

    if kind == 'unsharp' and params['lambda'] < 0:
        raise ParamError(f"unsharp: 'lambda' must be >= 0, got {params['lambda']}")
    if kind == 'tikhonov' and not params['lambda'] > 0:
        raise ParamError(f"tikhonov: 'lambda' must be > 0, got {params['lambda']}")
    if kind == 'downup':
        if params['scale'] < 2:
            raise ParamError(f"downup: 'scale' must be an integer >= 2, got {params['scale']}")
        if params['down'] not in DOWN_METHODS:
            raise ParamError(f"downup: unknown down method '{params['down']}', expected one of {DOWN_METHODS}")
        if params['up'] not in UP_METHODS:
            raise ParamError(f"downup: unknown up method '{params['up']}', expected one of {UP_METHODS}")
    if kind == 'conv':
        if (params['weights'] is None) == (params['kernel'] is None):
            raise ParamError("conv: give exactly one of 'weights' or 'kernel'")
        if params['weights'] is not None:
            parse_weights(params['weights'])
        if params['anchor'] is not None:
            parse_anchor(params['anchor'])
    if kind == 'external':
        validate_template(params['cmd'])
        if params['format'] not in EXCHANGE_FORMATS:
            raise ParamError(f"external: unknown format '{params['format']}', expected one of {EXCHANGE_FORMATS}")


def filter_spec(kind, **params):
    """Shorthand constructor: filter_spec('gaussian', sigma=2, support=21)."""
    if 'lam' in params:
        params['lambda'] = params.pop('lam')
    return FilterSpec(kind, params)


def parse_filter_spec(text):
    """Parse a filter-spec string.

    Args:
        text (str): Spec string, e.g. 'gaussian:sigma=2,support=21'

    Returns:
        FilterSpec: The validated spec

    Raises:
        SpecParseError: Malformed string or invalid parameter; carries the
            character position where parsing failed
    """
    if text is None or not text.strip():
        raise SpecParseError("Empty filter spec", text or "", 0)

    start = len(text) - len(text.lstrip())
    end = len(text.rstrip())
    colon = text.find(':', start)
    kind_end = colon if 0 <= colon < end else end
    kind = text[start:kind_end].strip().lower()
    if not kind:
        raise SpecParseError("Missing filter kind", text, start)
    if kind not in _SCHEMA:
        raise SpecParseError(f"Unknown filter kind '{kind}'", text, start)
    required, optional = _SCHEMA[kind]
    allowed = set(required) | set(optional)

    params = {}
    if kind_end < end:
        pos = kind_end + 1
        if pos >= end:
            raise SpecParseError("Expected key=value after ':'", text, pos)
        while pos < end:
            eq = text.find('=', pos)
            comma = text.find(',', pos)
            if eq < 0 or eq >= end or (0 <= comma < eq):
                raise SpecParseError("Expected key=value", text, pos)
            key = text[pos:eq].strip().lower()
            if not key:
                raise SpecParseError("Missing parameter name", text, pos)
            if key not in allowed:
                raise SpecParseError(f"Unknown parameter '{key}' for {kind}", text, pos)
            if key in params:
                raise SpecParseError(f"Duplicate parameter '{key}'", text, pos)

            value_start = eq + 1
            if key == 'cmd' or comma < 0 or comma >= end:
                value_end = end
            else:
                value_end = comma
            raw = text[value_start:value_end].strip()
            if not raw:
                raise SpecParseError(f"Missing value for '{key}'", text, value_start)
            try:
                params[key] = _coerce(key, raw)
            except ParamError as e:
                raise SpecParseError(str(e), text, value_start) from e

            if value_end < end:
                pos = value_end + 1
                if pos >= end or not text[pos:end].strip():
                    raise SpecParseError("Trailing ','", text, value_end)
            else:
                pos = end

    try:
        return FilterSpec(kind, params)
    except SpecParseError:
        raise
    except ParamError as e:
        raise SpecParseError(str(e), text, start) from e


def as_filter_spec(value):
    """Accept a FilterSpec or a spec string."""
    if isinstance(value, FilterSpec):
        return value
    if isinstance(value, str):
        return parse_filter_spec(value)
    raise ParamError(f"Expected a filter spec, got {type(value).__name__}")


def _disk_support(r):
    return 2 * int(math.ceil(r)) + 1 if r >= 1 else 3


def kernel_from_spec(spec, shape=None):
    """Kernel of a linear filter spec.

    Args:
        spec (FilterSpec | str): identity, gaussian, box, disk, conv or unsharp
        shape (tuple, optional): Image or grid shape used to cap default supports

    Returns:
        Kernel: The convolution kernel the spec applies
    """
    spec = as_filter_spec(spec)
    p = spec.params
    if spec.kind == 'identity':
        return delta_kernel()
    if spec.kind == 'gaussian':
        support = p['support'] or default_gaussian_support(p['sigma'], shape)
        return gaussian_kernel(p['sigma'], support)
    if spec.kind == 'box':
        return box_kernel(p['radius'])
    if spec.kind == 'disk':
        return disk_kernel(p['r'], p['support'] or _disk_support(p['r']))
    if spec.kind == 'conv':
        if p['weights'] is not None:
            weights = parse_weights(p['weights'])
        else:
            weights = _load_kernel_file(os.path.abspath(p['kernel']))
        anchor = parse_anchor(p['anchor']) if p['anchor'] is not None else None
        return Kernel(weights, anchor=anchor, name="conv")
    if spec.kind == 'unsharp':
        support = p['support'] or default_gaussian_support(p['sigma'], shape)
        return unsharp_kernel(p['lambda'], p['sigma'], support)
    raise ParamError(f"Filter '{spec.kind}' is not a fixed convolution")


def apply_filter(spec, image):
    """Apply a filter to an image.

    Args:
        spec (FilterSpec | str | callable): Filter to apply; a callable is
            treated as an Image -> Image black box
        image (Image): Input image

    Returns:
        Image: Filtered image with the same dimensions as the input

    Raises:
        FilterError: A black-box callable returned an image of another shape
    """
    image = as_image(image)
    if callable(spec) and not isinstance(spec, (FilterSpec, str)):
        result = as_image(spec(image))
        if result.shape != image.shape:
            raise FilterError(f"Filter changed dimensions: {image.shape} -> {result.shape}")
        return result

    spec = as_filter_spec(spec)
    p = spec.params
    kind = spec.kind

    if kind == 'identity':
        return builtin.identity(image)
    if kind in ('gaussian', 'box', 'disk', 'conv'):
        return convolve(image, kernel_from_spec(spec, image.shape), p['boundary'])
    if kind == 'unsharp':
        return builtin.unsharp(image, p['lambda'], p['sigma'], p['support'], p['boundary'])
    if kind == 'bilateral':
        return builtin.bilateral(image, p['sigma_s'], p['sigma_r'], p['radius'])
    if kind == 'guided':
        return builtin.guided(image, p['radius'], p['eps'])
    if kind == 'median':
        return builtin.median(image, p['radius'])
    if kind == 'gamma':
        return builtin.gamma(image, p['gamma'])
    if kind == 'downup':
        return down_up(image, p['scale'], p['down'], p['up'])
    if kind == 'tikhonov':
        return builtin.tikhonov(image, p['lambda'])
    if kind == 'external':
        return external_filter(p['cmd'], image, p['format'], p['timeout'])
    raise ParamError(f"No implementation for filter kind '{kind}'")


class SpecFilter:
    """Picklable Image -> Image callable bound to one spec."""

    def __init__(self, spec):
        self.spec = as_filter_spec(spec)

    def __call__(self, image):
        return apply_filter(self.spec, image)

    def __repr__(self):
        return f"SpecFilter({self.spec.to_string()!r})"

