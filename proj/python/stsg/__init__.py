"""Scattering features on sensor graphs with random-forest learning."""

from ._core import *  # noqa: F401,F403
from ._core import Error, InvalidArgument, DimensionError, UnsupportedDecomposition, IngestError  # noqa: F401

__version__ = "0.1.0"
