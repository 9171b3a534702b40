"""Tensor-product Gauss-Legendre quadrature on truncated boxes.

Every integral against a measure in this package is evaluated on a
:class:`QuadratureRule`: nodes and positive weights on ``[-R, R]^d`` for
``d`` in 1..3.  Reductions use numpy's pairwise summation over a
contiguous array, so the summation order is fixed by the node order and
repeated calls are bit-identical.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InvalidArgumentError, NonFiniteIntegrandError, UnsupportedDimensionError

DEFAULT_ORDER = {1: 400, 2: 200, 3: 64}
TAIL_SIGMAS = 12.0


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights of a tensor rule on ``[-radius, radius]^dim``.

    Attributes
    ----------
    dim : int
    nodes : ndarray, shape (order**dim, dim)
    weights : ndarray, shape (order**dim,)
    radius : float
    order : int
        Nodes per axis.
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    radius: float
    order: int

    def __post_init__(self):
        if self.nodes.shape != (self.order**self.dim, self.dim):
            raise InvalidArgumentError("node array does not match order**dim")
        if not np.all(self.weights > 0):
            raise InvalidArgumentError("quadrature weights must be positive")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return self.weights.size

    def refined(self, factor=2):
        """Same box, ``factor`` times as many nodes per axis."""
        return tensor_rule(self.dim, self.order * factor, self.radius)


def tensor_rule(dim, order, radius):
    """Tensor-product Gauss-Legendre rule on ``[-radius, radius]^dim``."""
    if dim not in (1, 2, 3):
        raise UnsupportedDimensionError(f"dimension {dim} is not supported (1..3)")
    if int(order) != order or order < 2:
        raise InvalidArgumentError(f"order must be an integer >= 2, got {order!r}")
    if not radius > 0 or not np.isfinite(radius):
        raise InvalidArgumentError(f"radius must be positive, got {radius!r}")
    order = int(order)
    x, w = leggauss(order)
    x = x * radius
    w = w * radius
    axes = np.meshgrid(*([x] * dim), indexing="ij")
    nodes = np.stack([a.ravel() for a in axes], axis=-1)
    weights = w
    for _ in range(dim - 1):
        weights = np.multiply.outer(weights, w)
    return QuadratureRule(dim, np.ascontiguousarray(nodes), weights.ravel().copy(), float(radius), order)


def _check_finite(values, rule):
    finite = np.isfinite(values)
    if not finite.all():
        bad = np.argwhere(~finite)[0]
        i = bad[0]
        raise NonFiniteIntegrandError(rule.nodes[i].tolist(), values[tuple(bad)])


def integrate_values(values, rule):
    """Weighted sum of integrand values already evaluated at the nodes.

    ``values`` has shape ``(n,)`` or ``(n, ...)``; trailing axes are
    integrated componentwise.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[:1] != (len(rule),):
        raise InvalidArgumentError(f"expected {len(rule)} integrand values, got shape {values.shape}")
    _check_finite(values, rule)
    weights = rule.weights.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.sum(np.ascontiguousarray(weights * values), axis=0)


def integrate(f, rule):
    """Integrate ``f`` over the box of ``rule``.

    Parameters
    ----------
    f : callable
        Vectorized field mapping an ``(n, dim)`` array of points to ``(n,)``
        values (or ``(n, ...)`` for componentwise integration).
    rule : QuadratureRule

    Returns
    -------
    float or ndarray

    Raises
    ------
    NonFiniteIntegrandError
        If ``f`` is NaN or infinite at some node; the node is attached.
    """
    result = integrate_values(f(rule.nodes), rule)
    return float(result) if np.ndim(result) == 0 else result
