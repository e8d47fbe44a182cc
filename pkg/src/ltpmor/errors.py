"""Exception hierarchy.

Every numerical failure raised by the library derives from
:class:`NumericalError` so front ends can map it to one exit code.
"""


class LtpMorError(Exception):
    """Base class for all library errors."""


class NumericalError(LtpMorError, ArithmeticError):
    """A computation was refused or failed for numerical reasons."""


class SingularShiftError(NumericalError):
    """A shifted matrix ``sI - A`` is numerically singular."""


class SpectralOverlapError(NumericalError):
    """Spectra of ``A`` and ``-A^*`` (plus shifts) are not separated."""


class NotHermitianError(LtpMorError, ValueError):
    """A right-hand side that must be Hermitian is not."""


class UnstableSystemError(NumericalError):
    """A state matrix has an eigenvalue with ``Re >= -stability_margin``."""


class DefectivePolesError(NumericalError):
    """Poles are clustered or the eigenvector matrix is ill-conditioned."""


class LogBranchError(NumericalError):
    """The monodromy matrix has an eigenvalue on the closed negative real axis."""


class SpectralGapError(NumericalError):
    """``max |Im lambda(Q)| >= omega0``: pole shells may collide."""


class SharedStateMatrixError(LtpMorError, ValueError):
    """Two systems were required to share the same ``Q`` but do not."""


class FrequencyMismatchError(LtpMorError, ValueError):
    """Two periodic systems have different fundamental frequencies."""


class RankDeficiencyError(NumericalError):
    """A snapshot matrix has numerical rank below the requested order."""


class ConvergenceError(NumericalError):
    """An iteration ended without producing an acceptable result."""


class ShapeError(LtpMorError, ValueError):
    """Array dimensions are inconsistent."""


class FileFormatError(LtpMorError, ValueError):
    """An input file is malformed or violates its schema."""
