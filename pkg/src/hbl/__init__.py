"""Hessian spectral bifurcation in deep linear networks: exact assembly,
closed-form spectrum predictions, and reproducible experiments."""

from .errors import (
    ConfigurationError,
    ContractViolationError,
    DimensionError,
    DynamicsFailureError,
    HblError,
    NumericalError,
    OracleCapError,
    RegimeViolationError,
)
from .network import (
    DataModel,
    NetworkDims,
    TrainConfig,
    WeightStack,
    balanced_init,
    sample_frames,
)

__all__ = [
    "ConfigurationError",
    "ContractViolationError",
    "DataModel",
    "DimensionError",
    "DynamicsFailureError",
    "HblError",
    "NetworkDims",
    "NumericalError",
    "OracleCapError",
    "RegimeViolationError",
    "TrainConfig",
    "WeightStack",
    "balanced_init",
    "sample_frames",
]

__version__ = "0.1.0"
