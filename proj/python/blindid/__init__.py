"""Blind identification of LTV systems with sparse unknown inputs."""

from ._blindid import *  # noqa: F401,F403
from ._blindid import __version__  # noqa: F401
