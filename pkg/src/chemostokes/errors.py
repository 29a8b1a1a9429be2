"""Exception hierarchy shared by every chemostokes module."""


class ChemostokesError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(ChemostokesError, ValueError):
    """An operation was called with inputs that break its preconditions."""


class ValidationError(ChemostokesError, ValueError):
    """A model assumption on parameters or initial data is violated.

    ``assumption`` names the violated condition, e.g. ``"mu > 0"``.
    """

    def __init__(self, message, assumption=None):
        super().__init__(message)
        self.assumption = assumption


class SolverError(ChemostokesError, RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NumericalFailure(ChemostokesError, FloatingPointError):
    pass


class BlowupSuspected(ChemostokesError, RuntimeError):
    """Raised by the abort guard when a run looks like it is losing regularity."""

    def __init__(self, message, reason="", t=float("nan"), step_index=-1):
        super().__init__(message)
        self.reason = reason
        self.t = t
        self.step_index = step_index


class DiagnosticError(ChemostokesError, ArithmeticError):
    def __init__(self, message, functional=""):
        super().__init__(message)
        self.functional = functional


class SnapshotFormatError(ChemostokesError, IOError):
    pass
