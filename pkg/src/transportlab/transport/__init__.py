"""Transport maps between catalog measures."""

from .base import ACCURACY_TOLERANCE, TransportMap, function_battery, increment_map, pushforward_defect
from .brenier import brenier_1d, brenier_gaussian
from .knothe import knothe_2d
from .sinkhorn import sinkhorn_2d
from ..errors import InvalidArgumentError

METHODS = ("auto", "brenier_1d", "gaussian", "knothe", "sinkhorn")


def build_map(mu, nu, method="auto", *, cdf_grid=1024, epsilon=1e-2, max_iter=5000, rule=None):
    """Construct a map by method name.

    ``auto`` picks the closed form for Gaussian pairs, the quantile map in
    1D and the triangular map in 2D.
    """
    if method not in METHODS:
        raise InvalidArgumentError(f"unknown map method {method!r}; expected one of {METHODS}")
    if method == "auto":
        if mu.is_gaussian and nu.is_gaussian:
            method = "gaussian"
        elif mu.dim == 1:
            method = "brenier_1d"
        elif mu.dim == 2:
            method = "knothe"
        else:
            raise InvalidArgumentError("no automatic map method for non-Gaussian measures in dimension 3")
    if method == "gaussian":
        return brenier_gaussian(mu, nu)
    if method == "brenier_1d":
        return brenier_1d(mu, nu, cdf_grid, rule=rule)
    if method == "knothe":
        return knothe_2d(mu, nu, cdf_grid, rule=rule)
    return sinkhorn_2d(mu, nu, epsilon, max_iter)


__all__ = [
    "ACCURACY_TOLERANCE", "METHODS", "TransportMap", "brenier_1d", "brenier_gaussian", "build_map",
    "function_battery", "increment_map", "knothe_2d", "pushforward_defect", "sinkhorn_2d",
]
