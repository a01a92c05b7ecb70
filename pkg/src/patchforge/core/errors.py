"""Exception hierarchy. The CLI maps these onto exit codes."""

from typing import Optional


class PatchForgeError(Exception):
    """Base class for every error patchforge raises on purpose."""


class ConfigError(PatchForgeError):
    pass


class InputError(PatchForgeError):
    """Bad or unreadable user input (files, datasets, flags with bad values)."""


class ExchangeFormatError(InputError):
    def __init__(self, message: str, field: str = "", line: Optional[int] = None, source: str = ""):
        self.message = message
        self.field = field
        self.line = line
        self.source = source
        where = field or "document"
        if line is not None:
            where = f"line {line}: {where}"
        if source:
            where = f"{source}: {where}"
        super().__init__(f"{where}: {message}")

    def with_source(self, source: str) -> "ExchangeFormatError":
        return ExchangeFormatError(self.message, self.field, self.line, source)


class EmptyDatasetError(InputError):
    pass


class ExtentError(InputError):
    pass


class DetectorNotDifferentiableError(PatchForgeError):
    pass


class TrainingDivergedError(PatchForgeError):
    pass
