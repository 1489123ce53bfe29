"""UI module for EMHD Lab."""
from .terminal import TerminalUI

__all__ = ['TerminalUI']
