#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Adapter that turns an arbitrary command line into a filter.

The command template names its input and output files with the literal
placeholders {IN} and {OUT}. Each call writes the input image to a fresh
temporary directory, runs the command once and reads the result back.
"""

import os
import shlex
import logging
import tempfile
import subprocess

from defilter.exceptions import FilterError, ImageIOError, ParamError
from defilter.utils.image import as_image, load_image, save_image

logger = logging.getLogger(__name__)

EXCHANGE_FORMATS = ('pfm', 'png', 'pfm32', 'pfm64')
DEFAULT_TIMEOUT = 60.0
FORMAT_ENV = 'DEFILTER_FORMAT'

# Variables passed through to the child; everything else is dropped
_ENV_WHITELIST = ('PATH', 'HOME', 'LANG', 'LC_ALL', 'TMPDIR', 'PYTHONPATH',
                  'SYSTEMROOT', 'VIRTUAL_ENV')

_EXTENSIONS = {'pfm': '.pfm', 'pfm32': '.pfm', 'pfm64': '.pfm', 'png': '.png'}


def validate_template(command_template):
    """Raise ParamError unless the template carries both placeholders."""
    if not command_template or not command_template.strip():
        raise ParamError("External command template is empty")
    missing = [p for p in ('{IN}', '{OUT}') if p not in command_template]
    if missing:
        raise ParamError(f"External command template lacks placeholder(s) {', '.join(missing)}: {command_template}")
    return command_template


def child_environment(fmt):
    """Clean environment for the child process."""
    env = {key: os.environ[key] for key in _ENV_WHITELIST if key in os.environ}
    env[FORMAT_ENV] = fmt
    return env


def external_filter(command_template, image, format='pfm', timeout=DEFAULT_TIMEOUT):
    """Run a black-box command as a filter.

    Args:
        command_template (str): Shell command with {IN} and {OUT} placeholders
        image (Image): Input image
        format (str): Exchange format: 'pfm' (lossless), 'pfm32', 'pfm64' or
            'png' (8-bit, quantized)
        timeout (float): Seconds before the child is killed

    Returns:
        Image: The image the command wrote to {OUT}

    Raises:
        FilterError: Nonzero exit status, timeout, missing or unreadable output,
            or output dimensions that differ from the input
    """
    image = as_image(image)
    validate_template(command_template)
    if format not in EXCHANGE_FORMATS:
        raise ParamError(f"Unknown exchange format '{format}', expected one of {EXCHANGE_FORMATS}")

    if format == 'png':
        logger.debug("External filter exchanges 8-bit PNG; evaluation is quantized to 1/255")

    ext = _EXTENSIONS[format]
    with tempfile.TemporaryDirectory(prefix='defilter-') as workdir:
        in_path = os.path.abspath(os.path.join(workdir, 'input' + ext))
        out_path = os.path.abspath(os.path.join(workdir, 'output' + ext))
        save_image(image, in_path, format)

        command = (command_template
                   .replace('{IN}', shlex.quote(in_path))
                   .replace('{OUT}', shlex.quote(out_path)))
        logger.debug(f"Running external filter: {command}")

        try:
            completed = subprocess.run(
                command,
                shell=True,
                env=child_environment(format),
                capture_output=True,
                text=True,
                errors='replace',
                timeout=timeout,
                check=False,
            )
        except subprocess.TimeoutExpired as e:
            stderr = e.stderr or ""
            if isinstance(stderr, bytes):
                stderr = stderr.decode('utf-8', errors='replace')
            raise FilterError(f"External filter timed out after {timeout:g} s", stderr=stderr) from e

        if completed.returncode != 0:
            raise FilterError(f"External filter exited with status {completed.returncode}",
                              stderr=completed.stderr)

        if not os.path.isfile(out_path):
            raise FilterError("External filter did not write its output file", stderr=completed.stderr)
        try:
            result = load_image(out_path, format)
        except ImageIOError as e:
            raise FilterError(f"Cannot read external filter output: {e}", stderr=completed.stderr) from e

    if result.shape != image.shape:
        raise FilterError(f"External filter changed dimensions: {image.shape} -> {result.shape}")
    return result
