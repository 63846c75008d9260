"""Structured-light disparity estimation driven by pattern flow."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
