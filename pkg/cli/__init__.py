"""
CLI package initialization
"""
from cli.commands import COMMANDS

__all__ = ['COMMANDS']
