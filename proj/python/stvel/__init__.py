"""Spatio-temporal LGCP intensity estimation and spread-velocity fields."""

from ._stvel import *  # noqa: F401,F403
from ._stvel import __doc__  # noqa: F401
