"""Exception hierarchy shared by the library and the command line front end."""


class ZIBError(Exception):
    """Base class for every error raised by zibreg."""


class ValidationError(ZIBError, ValueError):
    """Bad user input: malformed data, config or arguments (CLI exit code 1)."""


class DomainError(ValidationError):
    """An argument lies outside the domain of the operation."""


class ShapeError(ValidationError):
    """Array dimensions are inconsistent with each other."""


class DatasetValidationError(ValidationError):
    """A dataset violates one or more of its invariants.

    ``problems`` holds one human-readable line per offending row or column.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid dataset:\n  " + "\n  ".join(self.problems))


class NumericalFailure(ZIBError, ArithmeticError):
    """The optimizer produced a non-finite objective (CLI exit code 2).

    ``dump`` carries the iterate and diagnostics at the point of failure.
    """

    def __init__(self, message, dump=None):
        self.dump = dump or {}
        super().__init__(message)


class StudyError(ZIBError, RuntimeError):
    """Every replicate of a Monte Carlo study failed."""
