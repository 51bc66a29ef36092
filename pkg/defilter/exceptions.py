#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exception hierarchy for defilter.

Library code raises these; only the command line interface turns them
into exit codes.
"""


class DefilterError(Exception):
    """Base class for all defilter errors."""

    exit_code = 1


class ParamError(DefilterError, ValueError):
    """Invalid parameter, configuration value or size guard violation."""

    exit_code = 2


class SpecParseError(ParamError):
    """Malformed filter-spec string.

    Args:
        message (str): Diagnostic
        text (str): The spec string being parsed
        position (int): Character offset where parsing failed
    """

    def __init__(self, message, text="", position=0):
        super().__init__(f"{message} (at position {position})")
        self.text = text
        self.position = position

    def diagnostic(self):
        """Return the spec string with a caret under the failing position."""
        return f"{self.text}\n{' ' * self.position}^"


class DimensionError(DefilterError, ValueError):
    """Two images are not metric-compatible."""

    exit_code = 2


class ImageIOError(DefilterError, OSError):
    """Unreadable, malformed or unsupported image file."""

    exit_code = 4


class FilterError(DefilterError):
    """A filter evaluation failed.

    Args:
        message (str): Diagnostic
        stderr (str): Captured standard error of an external command
        iteration (int, optional): Iteration of the reverse run that failed
    """

    exit_code = 5

    def __init__(self, message, stderr="", iteration=None):
        super().__init__(message)
        self.stderr = stderr
        self.iteration = iteration

    def __str__(self):
        text = super().__str__()
        if self.iteration is not None:
            text += f" (iteration {self.iteration})"
        if self.stderr:
            text += f"\n{self.stderr.strip()}"
        return text


class DivergenceError(DefilterError):
    """An iterate left the finite reals.

    Args:
        message (str): Diagnostic
        trace (ReverseTrace): Trace recorded up to the failing iteration
        iteration (int): Index of the non-finite iterate
    """

    exit_code = 3

    def __init__(self, message, trace=None, iteration=None):
        super().__init__(message)
        self.trace = trace
        self.iteration = iteration


class NumericsError(DefilterError, ArithmeticError):
    """A numerical routine failed (SVD, non-finite data)."""

    exit_code = 1
