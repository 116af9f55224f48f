"""Exception hierarchy shared by all bbenc modules."""


class BbencError(Exception):
    """Base class for package errors."""


class DomainError(BbencError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ParityError(DomainError):
    """Target function has the wrong (or indefinite) parity for the chosen method."""


class StructureError(BbencError, ValueError):
    """Registers or qubit indices are inconsistent."""


class ResourceError(BbencError, MemoryError):
    """Requested dense simulation exceeds the qubit budget."""


class CompileError(BbencError):
    """A gate cannot be lowered to the target basis."""


class SolverError(BbencError, RuntimeError):
    """A numerical solver failed to converge.

    Attributes
    ----------
    residual : float or None
        Final residual reached before giving up.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
