"""Exception and warning hierarchy for star-iscc."""

from typing import Optional


class StarIsccError(Exception):
    """Base class for all star-iscc errors."""


class ConfigError(StarIsccError):
    """Invalid or inconsistent configuration."""


class InvalidCoefficients(StarIsccError):
    """STAR coefficients violate per-element energy conservation."""


class DegenerateReceiver(StarIsccError):
    """A receive beamformer is identically zero."""


class DegeneratePattern(StarIsccError):
    """A beampattern is zero over the whole angle grid."""


class NumericalError(StarIsccError):
    """A linear-algebra step or a conic solve broke down."""


class StarInfeasible(StarIsccError):
    """The lifted STAR program is infeasible even after target relaxation."""


class InfeasibleSensing(StarIsccError):
    """No sensing beamformer meets the sensing threshold within the power budget.

    Attributes:
        required_watt: Lower bound on the sensing power the threshold needs
        budget_watt: BS power budget
    """

    def __init__(
        self,
        message: str,
        required_watt: Optional[float] = None,
        budget_watt: Optional[float] = None,
    ):
        self.required_watt = required_watt
        self.budget_watt = budget_watt
        if required_watt is not None and budget_watt is not None:
            message = (
                f"{message} (sensing needs at least {required_watt:.4g} W, "
                f"budget is {budget_watt:.4g} W)"
            )
        super().__init__(message)


class StarIsccWarning(UserWarning):
    """Base class for soft conditions reported through warnings."""


class RankNotConverged(StarIsccWarning):
    """The rank-one penalty residual stayed above tolerance at the iteration cap."""


class ExtractionLoss(StarIsccWarning):
    """Rank-one extraction degraded the uplink SINR targets.

    Attributes:
        degradation: Largest relative SINR shortfall over all DRs
    """

    def __init__(self, message: str, degradation: float = 0.0):
        self.degradation = degradation
        super().__init__(message)
