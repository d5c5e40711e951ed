"""Errors raised by the spectral solver."""


class SolverError(Exception):
    """Base class for every numerical failure raised by the solver."""


class ParityViolation(SolverError, ValueError):
    """Grid values are inconsistent with the requested z-symmetry."""


class ResolutionMismatch(SolverError, ValueError):
    """Operands live on different resolutions."""


class ZeroMode(SolverError, ValueError):
    """The operation is undefined at the wave index (0, 0, 0)."""


class DomainError(SolverError, ValueError):
    """The requested branch does not exist at this index or parameter."""


class InadmissibleMode(SolverError, ValueError):
    """The (kind, index) pair is excluded from the eigenbasis."""


class NonpositiveTheta(SolverError, ArithmeticError):
    """The momentum weight dropped to (or below) the positivity floor."""


class IncompatibleRHS(SolverError, ValueError):
    """An elliptic right-hand side has non-zero mean."""


class NoConvergence(SolverError, ArithmeticError):
    """An iterative solve did not reach its tolerance."""


class DivergenceViolation(SolverError, ValueError):
    """A velocity field violates its divergence constraint."""


class StabilityGuard(SolverError, ValueError):
    """The explicit step size exceeds the acoustic stability limit."""
