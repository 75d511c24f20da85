"""Conformal classification with contaminated calibration labels."""

from clnoise._core import *  # noqa: F401,F403
from clnoise._core import __doc__  # noqa: F401
