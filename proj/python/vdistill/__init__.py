"""Temporal-resolution-aware video dataset distillation."""

from _vdistill import *  # noqa: F401,F403
from _vdistill import __doc__  # noqa: F401
