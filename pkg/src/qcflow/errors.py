"""Exception types shared across the package."""


class QcflowError(Exception):
    """Base class for all package-specific failures."""


class NonPositiveDeterminant(QcflowError):
    """A Jacobian (or candidate distortion input) has det <= 0."""


class NonFiniteValue(QcflowError):
    """A computation produced NaN or infinity."""


class UnsupportedRegime(QcflowError):
    """Requested (n, p) combination has no supported constants."""


class GuardViolation(QcflowError):
    """Evaluation point violates a map's domain guard."""


class OriginExcluded(GuardViolation):
    """Point too close to the excluded origin of a radial map."""


class AxisExcluded(GuardViolation):
    """Point too close to the excluded symmetry axis."""


class SeamExcluded(GuardViolation):
    """Point inside the excluded band around a sector seam."""


class DegenerateTangentImage(QcflowError):
    """Pushforward of the tangent frame lost rank, no trace frame exists."""


class HypothesisViolated(QcflowError):
    """An input fails the structural hypothesis a formula requires."""


class AllRowsDegenerate(QcflowError):
    """Every candidate row of the driving field is numerically zero."""


class RowSwitched(QcflowError):
    """A trajectory changed active row where a fixed row was required."""


class StepFailure(QcflowError):
    """An integrator stage could not be evaluated."""


class DeterminantCollapse(QcflowError):
    """A flow step drove some node's determinant below the safety floor."""


class UnknownMap(QcflowError):
    """Requested map id is not in the registry."""


class UnknownSuite(QcflowError):
    """Requested verification suite does not exist."""


class ConfigError(QcflowError):
    """Malformed CLI configuration or arguments."""
