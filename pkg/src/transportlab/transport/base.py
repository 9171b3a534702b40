"""The transport-map container and map-level utilities."""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError, InvalidArgumentError
from ..quadrature import integrate_values

KINDS = ("optimal_1d", "gaussian_linear", "triangular", "entropic")
ACCURACY_TOLERANCE = {"exact": 1e-9, "grid": 1e-4, "approximate": 5e-2}


@dataclass(eq=False)
class TransportMap:
    """A map ``T`` pushing one measure onto another, with derivatives.

    Attributes
    ----------
    dim : int
    kind : str
        One of ``optimal_1d``, ``gaussian_linear``, ``triangular``,
        ``entropic``.
    value : callable
        ``(n, d) -> (n, d)``.
    jacobian : callable
        ``(n, d) -> (n, d, d)``; equals the Hessian of the potential for
        gradient maps.
    jacobian_dderiv : callable
        ``(x, e) -> (n, d, d)``, the directional derivative of the Jacobian.
    accuracy_class : str
        ``exact``, ``grid`` or ``approximate``.
    inverse_value : callable, optional
    optimal : bool
        True when ``T`` is the gradient of a convex function (the quadratic
        cost optimal map).  Triangular maps between product measures are.
    domain_radius : float
        ``T`` may be evaluated on ``|x|_inf <= domain_radius``.
    method : str
        Constructor name, for reports.
    """

    dim: int
    kind: str
    value: Callable
    jacobian: Callable
    jacobian_dderiv: Callable
    accuracy_class: str
    inverse_value: Optional[Callable] = None
    optimal: bool = False
    domain_radius: float = np.inf
    method: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown map kind {self.kind!r}")
        if self.accuracy_class not in ACCURACY_TOLERANCE:
            raise InvalidArgumentError(f"unknown accuracy class {self.accuracy_class!r}")

    @property
    def tolerance(self):
        return ACCURACY_TOLERANCE[self.accuracy_class]

    @property
    def triangular(self):
        """True for triangular maps, including lower-triangular linear ones."""
        if self.kind == "triangular" or self.dim == 1:
            return True
        A = self.info.get("matrix")
        if A is None:
            return False
        A = np.asarray(A)
        return bool(np.all(np.abs(np.triu(A, 1)) <= 1e-14 * np.max(np.abs(A))))

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.domain_radius):
            worst = float(np.max(np.abs(x)))
            raise DomainError(f"point with |x|_inf = {worst:g} outside the map domain (radius {self.domain_radius:g})")
        return x


def increment_map(transport, e, t, x, base=None):
    """Displacement ``T(x + t e) - T(x)`` at the points ``x``.

    ``base`` may carry precomputed values ``T(x)``.

    Returns
    -------
    disp : ndarray, shape (n, d)
    sq : ndarray, shape (n,)
        ``|disp|^2``, ready for integration.

    Raises
    ------
    DomainError
        If some ``x`` or ``x + t e`` lies outside the map's domain.
    """
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.size != transport.dim:
        raise InvalidArgumentError("direction has the wrong dimension")
    shifted = x + t * e
    transport.check_domain(x)
    transport.check_domain(shifted)
    if t == 0:
        disp = np.zeros_like(x)
    else:
        disp = transport.value(shifted) - (transport.value(x) if base is None else base)
    return disp, np.einsum("ni,ni->n", disp, disp)


def function_battery(dim):
    """The pushforward battery: monomials of degree <= 3 and ``exp(-|x|^2/4)``."""
    battery = []
    for degree in range(4):
        for alpha in itertools.combinations_with_replacement(range(dim), degree):
            powers = np.bincount(np.array(alpha, dtype=int), minlength=dim)
            battery.append((f"x^{powers.tolist()}", lambda x, p=powers: np.prod(x**p, axis=1)))
    battery.append(("exp(-|x|^2/4)", lambda x: np.exp(-0.25 * np.einsum("ni,ni->n", x, x))))
    return battery


def pushforward_defect(transport, mu, nu, rule):
    """Largest ``|int phi(T) d mu - int phi d nu|`` over the test battery."""
    x = rule.nodes
    y = transport.value(x)
    dmu = mu.density(x)
    dnu = nu.density(x)
    worst = 0.0
    for _, phi in function_battery(transport.dim):
        lhs = integrate_values(phi(y) * dmu, rule)
        rhs = integrate_values(phi(x) * dnu, rule)
        worst = max(worst, abs(float(lhs - rhs)))
    return worst
