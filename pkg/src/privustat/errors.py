"""Exception types shared across the package."""


class PrivustatError(Exception):
    """Base class for all package-specific errors."""


class CombinatorialOverflow(PrivustatError):
    """Requested an enumeration larger than the configured cap."""


class EmptyIncidence(PrivustatError):
    """An index appears in no subset of the family."""


class DegeneracyMismatch(PrivustatError):
    """Degenerate variance formula requested but the first conditional variance is nonzero."""


class NonPositiveScale(PrivustatError):
    """Noise scale must be strictly positive."""


class BudgetExhausted(PrivustatError):
    """A spend would push the privacy ledger past its total."""


class InsufficientData(PrivustatError):
    """Not enough data points for the requested operation."""


class AuditFailure(PrivustatError):
    """A verification audit found a violating instance."""


class NegativeDeltaWarning(UserWarning):
    """A Hoeffding component variance computed from empirical inputs is negative."""


class PreconditionWarning(UserWarning):
    """A stated sample-size or parameter precondition does not hold; proceeding anyway."""
