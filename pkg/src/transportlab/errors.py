"""Exception hierarchy shared by every transportlab module."""


class TransportLabError(Exception):
    """Base class for all errors raised by transportlab."""


class InvalidArgumentError(TransportLabError, ValueError):
    pass


class UnsupportedDimensionError(InvalidArgumentError):
    pass


class InvalidCovarianceError(InvalidArgumentError):
    pass


class AsymmetryError(InvalidArgumentError):
    pass


class SingularMatrixError(TransportLabError, ArithmeticError):
    pass


class NonFiniteIntegrandError(TransportLabError, ArithmeticError):
    """An integrand evaluated to NaN or inf at a quadrature node."""

    def __init__(self, node, value):
        self.node = node
        self.value = value
        super().__init__(f"integrand is {value!r} at node {list(node)!r}")


class UnderflowError(TransportLabError, ArithmeticError):
    pass


class DomainTooSmallError(TransportLabError):
    """Tail mass outside the integration box is not negligible."""


class DomainError(TransportLabError):
    """A map was evaluated outside the region where it is defined."""


class ConvergenceError(TransportLabError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, violation):
        self.violation = violation
        super().__init__(f"{message} (final marginal violation {violation:.3e})")


class RegistryError(TransportLabError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConfigError(TransportLabError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
