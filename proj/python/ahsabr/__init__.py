"""One-step shifted SABR pricing and exact five-quote calibration."""

from ._core import *  # noqa: F401,F403
from ._core import AhsabrError, SabrParams, calibrate, solve_self_consistent

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
