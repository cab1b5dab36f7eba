"""Exception types shared across the package."""


class OTLabError(Exception):
    """Base class for all package-specific errors."""


class AllCollinearError(OTLabError):
    """Sample points lie on a single line; the lower hull is degenerate."""


class DuplicatePointError(OTLabError):
    """Two samples share a base point but carry different values."""


class HullConstructionError(OTLabError):
    """The lower hull could not be certified exactly."""


class OutOfDomainError(OTLabError):
    """Query point or region leaves the function's domain."""


class MassMismatchError(OTLabError):
    """Source and target measures carry different total mass."""


class EmptyMeasureError(OTLabError):
    """A measure with no atoms where at least one is required."""


class InvalidScaleError(OTLabError):
    """Non-positive scale parameter."""


class NotSquareError(OTLabError):
    """Support structure is not square where squareness is required."""


class HallViolationError(OTLabError):
    """The matching feasibility condition fails; carries a witness subset."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ZeroKError(OTLabError):
    """Subdifferential-diameter constant K is zero where a division needs it."""


class PreconditionError(OTLabError):
    """A stated precondition of a bound or lemma does not hold."""

    def __init__(self, message, which=None):
        super().__init__(message)
        self.which = which


class InvalidSubgradientError(OTLabError):
    """A claimed subgradient fails its certificate."""


class NonPositiveGammaError(OTLabError):
    """Weight parameter gamma must be positive."""


class GridTooSmallError(OTLabError):
    """Grid has no interior nodes for the requested stencil."""


class InvalidDimsError(OTLabError):
    """Dimension parameters out of range."""


class DimensionBranchError(OTLabError):
    """Bound is vacuous for d < n/2."""


class NegativeGapError(OTLabError):
    """Gradient gap must be nonnegative."""


class NoApplicableScenarioError(OTLabError):
    """Calibration set contains no scenario meeting the preconditions."""
