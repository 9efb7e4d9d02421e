"""Exception types shared across the package."""


class OracleTransferError(Exception):
    """Base class for all package errors."""


class DimError(OracleTransferError):
    """Vector dimension does not match the ambient dimension."""


class ModelEmpty(OracleTransferError):
    """Operation requires a piecewise-max model with at least one piece."""


class OutOfDomain(OracleTransferError):
    """Query point lies outside the domain the operation is defined on."""


class BadArgs(OracleTransferError):
    """Inconsistent or missing arguments."""


class BadEta(OracleTransferError):
    """Oracle accuracy parameter violates its admissible range."""


class EtaTooLarge(BadEta):
    """Accuracy exceeds the cap required by the smooth transfer procedure."""


class BadDelta(OracleTransferError):
    """Deep-point margin is not smaller than the inscribed-ball radius."""


class Exact1dInHighDim(OracleTransferError):
    """The exact 1-d smoothing integrator was requested for dimension > 1."""


class DegenerateCone(OracleTransferError):
    """Cone projection collapsed to zero and no fallback normal was given."""


class AlgorithmQueryOutOfBall(OracleTransferError):
    """A wrapped algorithm emitted a query outside the radius-R ball."""


class NumericalCollapse(OracleTransferError):
    """Ellipsoid matrix lost positive definiteness."""


class BudgetExceeded(OracleTransferError):
    """The algorithm needs more oracle exchanges than the budget T allows."""


class NoFeasiblePoint(OracleTransferError):
    """No queried point was reported feasible."""


class BadGrid(OracleTransferError):
    """Sweep grid is empty or varies an unknown axis."""


class SchemaError(OracleTransferError):
    """Config or CSV content does not match the expected schema."""


class TraceMismatch(OracleTransferError):
    """Recorded trace rows diverge from a deterministic replay."""
