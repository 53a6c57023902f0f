"""Parametric multi-task optimization."""

from ._pmto import *  # noqa: F401,F403
from ._pmto import __version__  # noqa: F401
