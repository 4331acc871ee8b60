"""Numerical model of displaced single-photon entanglement in truncated Fock space."""

from .fock import SCHEMA_VERSION, TruncationError
from .numerics import NotHermitianError

__version__ = "0.1.0"

__all__ = ["SCHEMA_VERSION", "TruncationError", "NotHermitianError", "__version__"]
