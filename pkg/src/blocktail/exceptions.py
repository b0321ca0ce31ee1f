"""Exception and warning types shared across the package.

Validation problems (bad block shapes, malformed files) and domain problems
(parameters outside the regime where a computation is meaningful) are kept
as separate branches so callers, in particular the CLI, can map them to
distinct exit codes.
"""


class BlocktailError(Exception):
    """Base class for all package errors."""


class ValidationError(BlocktailError, ValueError):
    """Input data is structurally invalid."""


class DomainError(BlocktailError, ValueError):
    """Parameters are outside the mathematically valid domain."""


# -- block data validation -------------------------------------------------

class NonMonotoneBlock(ValidationError):
    """Top order statistics of a block are not non-increasing."""


class RanksExceedBlockSize(ValidationError):
    """A block stores more top order statistics than it has observations."""


class TooFewBlocks(ValidationError):
    """At least two blocks are required."""


class NegativeLogValue(ValidationError):
    """Log observations must be >= 0 (raw observations clamped at 1)."""


class InsufficientData(ValidationError):
    """Not enough raw observations to form the requested blocks."""


class HeterogeneousData(ValidationError):
    """Operation requires blocks with a common (m, r)."""


# -- estimation / inference -----------------------------------------------

class ZeroACoeff(DomainError):
    """The quantile scaling coefficient is exactly zero."""


class ZeroNotInHull(DomainError):
    """All constraint values share one sign; the EL weight problem is infeasible."""


class DegenerateEstimate(DomainError):
    """Tail index estimate is zero; interval construction is degenerate."""


class UnknownV(DomainError):
    """No bundled block-growth exponent for this model; pass one explicitly."""


# -- warnings ---------------------------------------------------------------

class BlocktailWarning(UserWarning):
    """Base class for package warnings."""


class NonNegativeACoeffWarning(BlocktailWarning):
    """Quantile scaling coefficient >= 0: the target quantile is not in the
    far tail relative to the block layout. Point estimation proceeds."""


class CorrectionFactorWarning(BlocktailWarning):
    """Pseudo-observation weight grows too fast relative to the number of
    blocks for the adjusted-likelihood calibration to hold."""
