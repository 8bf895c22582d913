"""Stein-method Wasserstein bounds, exact transport and companion experiments."""

from ._steinw import *  # noqa: F401,F403
from ._steinw import __version__
