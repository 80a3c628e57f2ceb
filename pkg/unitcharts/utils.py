#!/usr/bin/env python3

"""Various helpers with no better place to."""

import logging
import sys
from typing import Any, Optional


class Color:
    """Text color handling."""

    # pylint: disable=too-few-public-methods

    RESET = "\x1b[0m"
    RED = "\x1b[1;31m"
    YELLOW = "\x1b[1;33m"
    WHITE = "\x1b[1;37m"


class UnitChartsException(Exception):
    """A generic unitcharts error."""

    exit_code = 4


class DomainError(UnitChartsException, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 2


class DataError(DomainError):
    """A data value lies outside the open unit interval."""

    def __init__(self, message: str, index: int):
        super().__init__(message)

        self.index = index


class InputError(UnitChartsException):
    """An input file could not be used."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)

        self.line = line


class NumericError(UnitChartsException):
    """A numeric procedure failed to converge."""

    def __init__(self, message: str, best: Any = None,
                 diagnostics: Optional[dict[str, Any]] = None):
        super().__init__(message)

        self.best = best
        self.diagnostics = diagnostics or {}


class DesignError(UnitChartsException):
    """A chart could not be designed for the requested target."""

    exit_code = 3


class EstimationError(UnitChartsException):
    """A run-length or parameter estimate could not be trusted."""

    exit_code = 3


class FitError(EstimationError):
    """A maximum-likelihood fit failed."""

    def __init__(self, message: str,
                 diagnostics: Optional[dict[str, Any]] = None):
        super().__init__(message)

        self.diagnostics = diagnostics or {}


class StatTestError(UnitChartsException):
    """A statistical test cannot be computed on the given data."""

    exit_code = 3


class _LogFormatter(logging.Formatter):
    colors = {
        logging.DEBUG: Color.WHITE,
        logging.WARNING: Color.YELLOW,
        logging.ERROR: Color.RED,
        logging.CRITICAL: Color.RED,
    }
    detail_logformat = "{color}[%(levelname)s] %(name)s: %(message)s{reset}"
    logformat = "{color}%(message)s{reset}"

    def _format(self, record, color):
        if color:
            reset = Color.RESET
        else:
            color = reset = ""

        if record.levelno == logging.DEBUG:
            log_fmt = self.detail_logformat.format(color=color, reset=reset)
        else:
            log_fmt = self.logformat.format(color=color, reset=reset)
        formatter = logging.Formatter(log_fmt)
        return formatter.format(record)


class _SimpleLogFormatter(_LogFormatter):
    def format(self, record):
        return self._format(record, None)


class _PrettyLogFormatter(_LogFormatter):
    def format(self, record):
        return self._format(record, self.colors.get(record.levelno))


def setup_logging(verbose: int):
    """Create logging handlers and setup logging configuration."""
    if verbose >= 1:
        loglevel = logging.DEBUG
    else:
        loglevel = logging.INFO

    # Reports may go to stdout, keep logs on stderr.
    defhandler = logging.StreamHandler(sys.stderr)
    if sys.stderr.isatty():
        defhandler.setFormatter(_PrettyLogFormatter())
    else:
        defhandler.setFormatter(_SimpleLogFormatter())
    handlers: list[logging.StreamHandler] = [defhandler]

    logging.basicConfig(level=loglevel, handlers=handlers, force=True)
