import argparse
import logging
import sys
from functools import lru_cache
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Type

from pydantic import ValidationError
from pydantic.utils import Representation
from typing_extensions import Literal

from bioshadow.exceptions import ConfigurationMismatch
from bioshadow.exceptions import DomainError
from bioshadow.exceptions import ScenarioError
from bioshadow.exceptions import TargetUnreachable


__all__ = [
    "CommandAssociation",
    "CommandCallbackType",
    "CommandLineBase",
    "is_arguments_for",
    "is_command_for",
    "EXIT_OK",
    "EXIT_INPUT_ERROR",
    "EXIT_UNREACHABLE",
    "EXIT_MISMATCH",
]


log = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_UNREACHABLE = 3
EXIT_MISMATCH = 4

CallbackType = Literal["command", "arguments"]


class CommandAssociation(Representation):
    __slots__ = ("method_name", "callback_type", "commands", "help")

    def __init__(
            self,
            method_name: str,
            callback_type: CallbackType,
            commands: List[str],
            help: Optional[str] = None
    ):
        self.method_name = method_name
        self.callback_type = callback_type
        if callback_type == "command" and len(commands) != 1:
            raise ValueError("A command handler must be registered for exactly one command.")
        self.commands = commands
        self.help = help


class CommandCallbackTypeMeta(type):

    def __instancecheck__(self, instance):
        return bool(
            callable(instance) and hasattr(instance, "__bioshadow_command_info__")
        )


class CommandCallbackType(metaclass=CommandCallbackTypeMeta):
    __bioshadow_command_info__: List[CommandAssociation]
    __name__: str

    def __new__(cls, callback: callable):
        callback.__bioshadow_command_info__ = []
        return callback

    def __call__(self, *args, **kwargs):
        raise NotImplementedError


def _register(
        callback_type: CallbackType,
        commands: List[str],
        help: Optional[str] = None
) -> Callable[[callable], CommandCallbackType]:
    def _wrap(func: callable) -> CommandCallbackType:
        if not isinstance(func, CommandCallbackType):
            func = CommandCallbackType(func)
        func.__bioshadow_command_info__.append(CommandAssociation(
            method_name=func.__name__,
            callback_type=callback_type,
            commands=commands,
            help=help
        ))
        return func

    return _wrap


def is_command_for(name: str, help: Optional[str] = None) -> Callable[[callable], CommandCallbackType]:
    """Register a method as the handler of sub-command ``name``.

    The handler receives the parsed ``argparse.Namespace`` and returns an exit code.
    """
    return _register("command", [name], help=help)


def is_arguments_for(*commands: str) -> Callable[[callable], CommandCallbackType]:
    """Register a method that adds arguments to the parsers of ``commands``."""
    return _register("arguments", list(commands))


class CommandLineBase:
    """
    Sub-commands and their arguments are plain methods tagged with
    `is_command_for` and `is_arguments_for`; subclasses only add methods.
    Exceptions escaping a handler are turned into exit codes by `exit_codes`,
    first match wins.
    """
    prog: str = "bioshadow"
    description: Optional[str] = None
    exit_codes: List[Tuple[Type[BaseException], int]] = [
        (TargetUnreachable, EXIT_UNREACHABLE),
        (ConfigurationMismatch, EXIT_MISMATCH),
        (ScenarioError, EXIT_INPUT_ERROR),
        (ValidationError, EXIT_INPUT_ERROR),
        (DomainError, EXIT_INPUT_ERROR),
    ]
    command_associations: List[CommandAssociation]

    def __init__(self):
        self.command_associations = []
        self._register_command_callables()

    def _register_command_callables(self):
        command_associations: List[CommandAssociation] = []
        for attr_name in dir(self):
            obj = getattr(self, attr_name)
            if isinstance(obj, CommandCallbackType):
                for assoc in obj.__bioshadow_command_info__:
                    command_associations.append(assoc)
        self.command_associations = command_associations

    @lru_cache(maxsize=None)
    def callback_mapping(self, *, callback_type: CallbackType) -> Dict[str, List[callable]]:
        d: Dict[str, List[callable]] = {}
        for assoc in self.command_associations:
            if assoc.callback_type == callback_type:
                for command in assoc.commands:
                    d.setdefault(command, []).append(getattr(self, assoc.method_name))
        return d

    def command_help(self, command: str) -> Optional[str]:
        for assoc in self.command_associations:
            if assoc.callback_type == "command" and assoc.commands == [command]:
                return assoc.help
        return None

    def add_global_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument(
            "--log-level",
            default="WARNING",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="Logging threshold for messages on standard error.",
        )

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.prog, description=self.description)
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        handlers = self.callback_mapping(callback_type="command")
        adders = self.callback_mapping(callback_type="arguments")
        for command in sorted(handlers):
            help_text = self.command_help(command)
            sub = subparsers.add_parser(command, help=help_text, description=help_text)
            self.add_global_arguments(sub)
            for adder in adders.get(command, []):
                adder(sub)
        return parser

    def configure_logging(self, level: str):
        logging.basicConfig(
            level=getattr(logging, level),
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )

    def exit_code_for(self, exc: BaseException) -> Optional[int]:
        for exc_type, code in self.exit_codes:
            if isinstance(exc, exc_type):
                return code
        return None

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        args = self.build_parser().parse_args(argv)
        self.configure_logging(args.log_level)
        handler = self.callback_mapping(callback_type="command")[args.command][0]
        try:
            return handler(args)
        except Exception as e:
            code = self.exit_code_for(e)
            if code is None:
                raise
            print(f"{self.prog} {args.command}: error: {e}", file=sys.stderr)
            return code
