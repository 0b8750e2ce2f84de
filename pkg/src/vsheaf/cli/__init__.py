"""Workspace files and the ``vsheaf`` command."""

from .commands import COMMANDS, Report, run
from .main import main
from .syntax import InputError
from .workspace import Workspace

__all__ = ["COMMANDS", "InputError", "Report", "Workspace", "main", "run"]
