"""Commands package - subcommand handlers and their helpers"""
from cli.commands.commands_endpoints import COMMANDS
from cli.commands.commands_functions import RunContext, load_config

__all__ = ['COMMANDS', 'RunContext', 'load_config']
