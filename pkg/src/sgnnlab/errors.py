"""
Exception types raised by sgnn-lab.

Every error carries a plain-language message. The classes also derive from
``ValueError`` so callers that only care about "bad input" can keep catching
the built-in type.
"""


class SgnnLabError(Exception):
    """Base class for all errors raised deliberately by the library."""


class ShapeError(SgnnLabError, ValueError):
    """
    Raised when array shapes do not conform.

    Typical causes are a batch whose column count differs from the model
    dimension, a parameter vector of the wrong length, or a forward cache
    that was produced by a different model or batch.
    """


class CapacityError(SgnnLabError, ValueError):
    """Raised when an operation would exceed a configured unit cap."""


class ConfigError(SgnnLabError, ValueError):
    """Raised for invalid training or experiment configuration."""
