"""Exception hierarchy shared across the package."""


class SparselabError(Exception):
    pass


class InvalidParameterError(SparselabError, ValueError):
    pass


class DimensionError(SparselabError, ValueError):
    pass


class CertificationError(SparselabError):
    """The design does not satisfy the coherence bound for the requested sparsity."""

    def __init__(self, message, s_admissible=None):
        super().__init__(message)
        self.s_admissible = s_admissible


class ConvergenceError(SparselabError):
    """Coordinate descent hit its sweep cap before the KKT residual reached tol."""

    def __init__(self, message, residual, solution=None):
        super().__init__(message)
        self.residual = residual
        self.solution = solution


class IterationLimitError(SparselabError):
    """Simplex pivot cap reached; ``incumbent`` holds the last basic solution."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class SingularBasisError(SparselabError):
    pass


class GateError(SparselabError):
    """A precondition of the error bounds failed before any work was done.

    ``exit_code`` is the stable CLI status for the failed gate.
    """

    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


class ExperimentError(SparselabError):
    pass


class ImplicationViolation(SparselabError):
    """A deterministic consequence of the good event failed on some trial."""
