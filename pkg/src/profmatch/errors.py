"""Exception hierarchy shared by all modules.

Each class carries the CLI exit status it maps to.
"""


class ProfmatchError(Exception):
    exit_code = 1


class InputError(ProfmatchError):
    """Malformed or semantically invalid input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LatticeError(InputError):
    """The declared order is cyclic or not a lattice."""


class IndexFormatError(InputError):
    """A persisted index could not be read back."""


class NotRealisable(ProfmatchError):
    exit_code = 2

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class InconsistentDatabase(ProfmatchError):
    exit_code = 2


class ResourceCapExceeded(ProfmatchError):
    exit_code = 3
