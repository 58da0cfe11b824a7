"""
Exception hierarchy for cdosim.

Every guard in the simulator raises a subclass of ``CdosimError``. Each class
also derives from the builtin that matches its nature, so callers that only
know about ``ValueError`` / ``IndexError`` still catch them.
"""


class CdosimError(Exception):
    """Base class for every error raised by cdosim."""


class OutOfRangeError(CdosimError, IndexError):
    """A Fock level index falls outside the truncated basis."""


class DimensionMismatchError(CdosimError, ValueError):
    """Operands live on truncated spaces of different dimension."""


class TruncationRiskError(CdosimError, ValueError):
    """A displacement amplitude is too large for the truncated space.

    Raised when ``|alpha|^2 > GUARD_FACTOR * dim``.
    """


class NotNormalizedError(CdosimError, ValueError):
    """A state that must be normalized is not (within 1e-10)."""


class InvalidSubspaceError(CdosimError, ValueError):
    """A dual-rail operation met amplitude outside the one-photon subspace."""


class DegeneratePostselectionError(CdosimError, ArithmeticError):
    """The selected detector pattern has (numerically) zero probability."""


class NyquistGuardError(CdosimError, ValueError):
    """The characteristic-function lattice is too coarse for the Wigner grid."""


class InsufficientStatisticsError(CdosimError, ArithmeticError):
    """A Monte Carlo run registered no detection events."""


class ConfigError(CdosimError, ValueError):
    """A run configuration is inconsistent or cannot be parsed."""


class GridError(CdosimError, ValueError):
    """A lattice half-extent or spacing cannot produce a usable grid."""
