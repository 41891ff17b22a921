"""Lottery state machines and their reference semantics."""

from .rules import *  # noqa: F401,F403
from .lottery import *  # noqa: F401,F403
from .perfect import *  # noqa: F401,F403
