"""Vine robot teleoperation simulator."""

from ._core import *  # noqa: F401,F403
from ._core import Error, InvalidInput, OutOfWorkspace, ParseError, ReplayIntegrityError, Session, ValidationError

__all__ = [name for name in dir() if not name.startswith("_")]
