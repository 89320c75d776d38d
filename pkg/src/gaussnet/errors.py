"""Exception hierarchy shared by all modules."""


class GaussnetError(Exception):
    """Base class for library errors."""


class InputError(GaussnetError, ValueError):
    """Malformed or out-of-contract input (dimension mismatch, bad parameter)."""


class DomainError(GaussnetError, ValueError):
    """Lattice spacing outside the non-aliasing region h < pi/R."""


class ConditioningError(GaussnetError, ArithmeticError):
    """Fourier division would overflow double precision."""


class ResourceError(GaussnetError, MemoryError):
    """A lattice or grid would exceed its configured size cap."""


class NumericError(GaussnetError, ArithmeticError):
    """A quadrature failed to converge."""


class DegenerateInputError(GaussnetError, ValueError):
    """Cost allocation requested for a tree with zero seminorm."""


class StudyError(GaussnetError, RuntimeError):
    """A rate study has too few usable points."""
