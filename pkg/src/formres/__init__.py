"""Stationary states, trapping and decay of differential forms on de Sitter type black hole spacetimes."""

__version__ = "0.1.0"

from .errors import ConfigError, FormresError, NumericalError  # noqa: F401
from .geometry import SdsParams  # noqa: F401
from .kds_maxwell import KdsParams  # noqa: F401
