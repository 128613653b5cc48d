"""Exception hierarchy shared by the simulator, analysis and CLI layers."""

from __future__ import annotations


class TradenetError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(TradenetError, ValueError):
    """A parameter or index is outside its allowed range."""


class DegenerateStateError(TradenetError):
    """Selection weights sum to zero, so no trader can be drawn."""


class InsufficientDataError(TradenetError, ValueError):
    """Too few samples, bins or sizes for the requested estimate."""


class NoOverlapError(TradenetError, ValueError):
    """Rescaled curves share no usable common support."""


class NotBracketedError(TradenetError, ValueError):
    """A curve never crosses the requested level."""


class CliqueUnavailableError(TradenetError):
    """Growth stopped before every pair of traders was linked."""


class EnsembleError(TradenetError):
    """No realization of an ensemble produced usable output."""


class ConfigError(TradenetError, ValueError):
    """Malformed or invalid configuration text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
