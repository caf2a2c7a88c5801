"""Exception types shared across the package."""


class SpandError(Exception):
    """Base class for all package-specific errors."""


class MatrixFormatError(SpandError):
    """Malformed Matrix Market content: bad header, bad entry, out-of-range index."""


class SymmetryError(MatrixFormatError):
    """A general-format file whose content is not symmetric within tolerance."""


class StaleIndexError(SpandError):
    """A global dof was requested from the trailing matrix after its elimination."""


class BreakdownError(SpandError):
    """A Cholesky pivot was non-positive: the (trailing) matrix is not SPD.

    ``pivot`` is the 0-based index of the offending diagonal entry within the
    block being factored.  When raised from inside a factorization run,
    ``level`` and ``cluster`` identify where the breakdown happened.
    """

    def __init__(self, message, pivot=None, level=None, cluster=None):
        super().__init__(message)
        self.pivot = pivot
        self.level = level
        self.cluster = cluster


class IndefinitePreconditionerError(SpandError):
    """The preconditioner action produced <z, r> <= 0 inside CG."""
