from typing import TYPE_CHECKING
from typing import Optional


if TYPE_CHECKING:
    from bioshadow.scenario.validation import ValidationReport


__all__ = [
    "BioshadowError",
    "DomainError",
    "TargetUnreachable",
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "UnknownClassError",
    "ConfigurationMismatch",
]


class BioshadowError(Exception):
    pass


class DomainError(BioshadowError, ValueError):
    """Argument outside the domain of a persistence or cost formula."""


class TargetUnreachable(BioshadowError):

    def __init__(self, target: float, max_index: float):
        self.target = target
        self.max_index = max_index
        super().__init__(
            f"Target index {target!r} cannot be reached;"
            f" the maximum achievable index is {max_index!r}."
        )


class ScenarioError(BioshadowError):
    pass


class ScenarioParseError(ScenarioError):

    def __init__(self, message: str, *, file: Optional[str] = None, line: Optional[int] = None):
        self.file = file
        self.line = line
        location = ""
        if file is not None:
            location = f"{file}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class ScenarioValidationError(ScenarioError):

    def __init__(self, report: "ValidationReport"):
        self.report = report
        lines = [f"- {issue}" for issue in report.errors]
        super().__init__("Scenario failed validation:\n" + "\n".join(lines))


class UnknownClassError(ScenarioError, ValueError):
    pass


class ConfigurationMismatch(BioshadowError):
    pass
