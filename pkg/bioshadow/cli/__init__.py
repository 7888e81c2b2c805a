# flake8: noqa: F401
from bioshadow.cli.base import CommandLineBase
from bioshadow.cli.base import is_arguments_for
from bioshadow.cli.base import is_command_for
from bioshadow.cli.main import DefaultCommandLine
from bioshadow.cli.main import main
