"""Exception taxonomy shared across the package."""


class NevalabError(Exception):
    """Base class for all package errors."""


class BoundsError(NevalabError, ValueError):
    """A fixation or click lies outside the owning image."""


class ParameterError(NevalabError, ValueError):
    """An argument violates an operation's preconditions."""


class ShapeMismatchError(NevalabError, ValueError):
    """Arrays that must share dimensions do not."""


class NumericError(NevalabError, ArithmeticError):
    """A numeric contract was violated (zero norm, non-finite output)."""


class BackendError(NevalabError, RuntimeError):
    """An embedding backend failed to load or run."""


class ParseError(NevalabError, ValueError):
    """A data file violates its schema.

    Carries enough context to report the offending location.
    """

    def __init__(self, message, *, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line

    def __str__(self):
        where = ""
        if self.path is not None:
            where = f"{self.path}"
            if self.line is not None:
                where += f":{self.line}"
            where = f" [{where}]"
        return super().__str__() + where
