"""Numerical verification of transport inequalities for the Brenier map."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AsymmetryError, ConfigError, ConvergenceError, DomainError, DomainTooSmallError, InvalidArgumentError,
    InvalidCovarianceError, NonFiniteIntegrandError, RegistryError, SingularMatrixError, TransportLabError,
    UnderflowError, UnsupportedDimensionError,
)
from .measures import (  # noqa: E402
    ProbabilityMeasure, RelativeDensity, density_ratio, make_gaussian, make_gaussian_shift_density,
    make_perturbed_gaussian, make_product, normalize, tilt,
)
from .transport import TransportMap, build_map  # noqa: E402
