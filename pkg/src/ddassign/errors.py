"""Exception hierarchy.

Every failure raised by the library derives from :class:`DDAssignError`.
The CLI maps :class:`ParseError` (and I/O errors) to exit code 1 and every
other library error to exit code 2.
"""


class DDAssignError(Exception):
    """Base class. ``stage`` names the pipeline step that failed, if known."""

    def __init__(self, message: str = "", *, stage: str | None = None, **details):
        super().__init__(message)
        self.stage = stage
        self.details = details

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class InvalidInput(DDAssignError):
    pass


class ParseError(DDAssignError):
    pass


class InsufficientExperiments(DDAssignError):
    pass


class ExcitationFailure(DDAssignError):
    pass


class NotPersistent(DDAssignError):
    pass


class ReconstructionFailure(DDAssignError):
    pass


class EmptySubspace(DDAssignError):
    pass


class SpectrumNotConjugateClosed(DDAssignError):
    pass


class TargetNotAllowable(DDAssignError):
    """Target eigenvector lies outside the allowable subspace.

    ``details`` carries ``residual`` and ``projection`` (the nearest
    allowable vector).
    """


class EigvecsDependent(DDAssignError):
    pass


class IllConditionedAssignment(DDAssignError):
    pass


class ConjugacyViolation(DDAssignError):
    pass


class InvalidSpec(DDAssignError):
    pass


class Infeasible(DDAssignError):
    pass


class TooLarge(DDAssignError):
    pass
