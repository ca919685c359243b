"""Exception hierarchy shared by all workbench modules.

Everything user-facing derives from WorkbenchError so the CLI can map
input problems to a single exit code.
"""


class WorkbenchError(Exception):
    """Base class for invalid inputs and violated preconditions."""


class SignatureError(WorkbenchError):
    pass


class StructureError(WorkbenchError):
    pass


class HomError(WorkbenchError):
    pass


class FormulaError(WorkbenchError):
    """Parse, typing, or evaluation failure; carries an offset when known."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (offset {position})"
        super().__init__(message)
        self.position = position


class PosetError(WorkbenchError):
    pass


class FilterError(WorkbenchError):
    pass


class OrderedSystemError(WorkbenchError):
    pass


class ChainError(WorkbenchError):
    pass


class ProductError(WorkbenchError):
    pass


class PreconditionError(WorkbenchError):
    """An operation was called on inputs that fail its stated precondition."""
