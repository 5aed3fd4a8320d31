"""Exception hierarchy shared by all hbl modules.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3.
"""


class HblError(Exception):
    """Base class for all package errors."""


class DimensionError(HblError):
    """Shapes do not conform, or a result would exceed a size cap."""


class ConfigurationError(HblError):
    """An experiment or train configuration violates a precondition."""


class ContractViolationError(HblError):
    """An input breaks a documented operation contract (e.g. asymmetry)."""


class NumericalError(HblError):
    """A numerical routine failed to converge or produced non-finite output."""


class RegimeViolationError(HblError):
    """A weight stack left the shared-spectral-structure regime."""


class DynamicsFailureError(HblError):
    """The scalar eigenvalue recursion diverged."""

    def __init__(self, message, step):
        super().__init__(f"{message} (at step {step})")
        self.step = step


class OracleCapError(HblError):
    """A finite-difference oracle request exceeds the configured size cap."""
