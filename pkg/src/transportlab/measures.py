"""Smooth probability measures ``exp(-V) dx`` with analytic derivatives.

The catalog is deliberately small: Gaussians in dimensions 1..3, a
cosine-perturbed standard Gaussian in 1D, products of 1D members, and
tilts ``g * nu`` of a reference measure by a relative density ``g``.
Every member carries closed-form gradient, Hessian and directional
Hessian derivative of its potential; normalizing constants and moments
are always obtained by quadrature.

Point arrays follow one convention throughout: ``x`` has shape ``(n, d)``,
scalar fields return ``(n,)``, vector fields ``(n, d)`` and matrix fields
``(n, d, d)``.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .calculus import fisher_information as _fisher_information
from .errors import DomainTooSmallError, InvalidArgumentError, InvalidCovarianceError, UnsupportedDimensionError

TAIL_TOLERANCE = 1e-12
CLOSED_FORM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Potential:
    """A smooth potential ``V = U + log_norm`` with analytic derivatives.

    ``center``, ``scale`` and ``min_scale`` are hints (location, largest and
    smallest spread) for the integration box used during normalization;
    they do not enter any formula.
    """

    dim: int
    raw_value: Callable
    raw_gradient: Callable
    raw_hessian: Callable
    raw_hessian_dderiv: Callable
    convexity_bound: Optional[float] = None
    log_norm: float = 0.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(1))
    scale: float = 1.0
    min_scale: float = 1.0

    def value(self, x):
        return self.raw_value(x) + self.log_norm

    def gradient(self, x):
        return self.raw_gradient(x)

    def hessian(self, x):
        return self.raw_hessian(x)

    def hessian_dderiv(self, x, e):
        """Directional derivative ``d/de D^2 V`` at each point."""
        return self.raw_hessian_dderiv(x, np.asarray(e, dtype=float))


class ProbabilityMeasure:
    """A normalized density ``exp(-V)`` together with cached moments.

    Use the ``make_*`` constructors or :func:`normalize` rather than
    instantiating directly.
    """

    def __init__(self, potential, rule, *, label="", gaussian=None, factors=None):
        self.potential = potential
        self.dim = potential.dim
        self.rule = rule
        self.label = label
        # (mean, covariance) when the measure is exactly Gaussian
        self.gaussian = gaussian
        # 1D factor measures when the measure is an explicit product
        self.factors = factors
        weights = rule.weights * self.density(rule.nodes)
        self.mass = float(np.sum(weights))
        x = rule.nodes
        self.mean = np.sum(weights[:, None] * x, axis=0)
        centered = x - self.mean
        self.covariance = np.einsum("n,ni,nj->ij", weights, centered, centered)
        self.second_moment = float(np.sum(weights * np.einsum("ni,ni->n", x, x)))
        self.fisher_information = _fisher_information(self, rule)
        eig = np.linalg.eigvalsh(self.covariance)
        self.scale = float(np.sqrt(eig.max()))
        self.min_scale = float(np.sqrt(eig.min()))

    def __repr__(self):
        return f"ProbabilityMeasure({self.label or 'anonymous'}, dim={self.dim})"

    @property
    def is_gaussian(self):
        return self.gaussian is not None

    @property
    def convexity_bound(self):
        return self.potential.convexity_bound

    def log_density(self, x):
        return -self.potential.value(x)

    def density(self, x):
        return np.exp(-self.potential.value(x))


@dataclass(frozen=True, eq=False)
class RelativeDensity:
    """A positive density ``g`` with respect to a reference measure.

    Stored through ``log g`` and its derivatives so that tails never
    underflow.  ``shift`` is set for exponential shifts
    ``g(x) = exp(<h, x> - |h|^2 / 2)``; ``source`` is set when ``g`` was
    built as the ratio of two catalog measures.
    """

    dim: int
    log_value: Callable
    log_gradient: Callable
    log_hessian: Callable
    label: str = ""
    shift: Optional[np.ndarray] = None
    source: Optional[ProbabilityMeasure] = None

    def value(self, x):
        return np.exp(self.log_value(x))

    def gradient(self, x):
        return self.value(x)[:, None] * self.log_gradient(x)

    def hessian(self, x):
        g = self.value(x)
        dlog = self.log_gradient(x)
        return g[:, None, None] * (self.log_hessian(x) + np.einsum("ni,nj->nij", dlog, dlog))


def _points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, dim)
    if x.shape[-1] != dim:
        raise InvalidArgumentError(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


def _check_dim(dim):
    if dim not in (1, 2, 3):
        raise UnsupportedDimensionError(f"dimension {dim} is not supported (1..3)")


# Gauss-Legendre resolves a Gaussian bump of width s on [-R, R] to machine
# precision once there are about 5.5 nodes per R/s.
NODES_PER_SPREAD = 5.5


def default_order(dim, radius, min_scale):
    """Default nodes per axis, raised for strongly anisotropic measures."""
    return max(quadrature.DEFAULT_ORDER[dim], int(np.ceil(NODES_PER_SPREAD * radius / min_scale)))


def default_rule(*measures, order=None, sigmas=quadrature.TAIL_SIGMAS):
    """The shared box rule for a group of measures.

    Radius is the largest mean coordinate plus ``sigmas`` times the largest
    standard deviation among the measures.
    """
    dim = measures[0].dim
    if any(m.dim != dim for m in measures):
        raise InvalidArgumentError("measures have different dimensions")
    center = max(float(np.max(np.abs(m.mean))) for m in measures)
    radius = center + sigmas * max(m.scale for m in measures)
    order = order or default_order(dim, radius, min(m.min_scale for m in measures))
    return quadrature.tensor_rule(dim, order, radius)


def _log_mass(potential, rule):
    logs = -potential.raw_value(rule.nodes)
    top = logs.max()
    return top + np.log(np.sum(rule.weights * np.exp(logs - top)))


def normalize(potential, rule=None, *, label="", gaussian=None, factors=None):
    """Fix ``log_norm`` so that ``exp(-V)`` integrates to one.

    Parameters
    ----------
    potential : Potential
        Its current ``log_norm`` is ignored.
    rule : QuadratureRule, optional
        Defaults to a box of ``|center| + 12 * scale`` with the default order
        for the dimension.

    Raises
    ------
    DomainTooSmallError
        If enlarging the box by half and doubling the order changes the mass
        by more than ``1e-12`` relative.
    """
    _check_dim(potential.dim)
    if rule is None:
        radius = float(np.max(np.abs(potential.center))) + quadrature.TAIL_SIGMAS * potential.scale
        rule = quadrature.tensor_rule(potential.dim, default_order(potential.dim, radius, potential.min_scale), radius)
    log_z = _log_mass(potential, rule)
    wide = quadrature.tensor_rule(potential.dim, 2 * rule.order, 1.5 * rule.radius)
    tail = abs(np.expm1(_log_mass(potential, wide) - log_z))
    if not np.isfinite(log_z) or not tail <= TAIL_TOLERANCE:
        raise DomainTooSmallError(
            f"mass outside the box of radius {rule.radius:g} is {tail:.2e} relative (limit {TAIL_TOLERANCE:g})"
        )
    return ProbabilityMeasure(replace(potential, log_norm=float(log_z)), rule, label=label, gaussian=gaussian, factors=factors)


def make_gaussian(mean, covariance, *, label=""):
    """Gaussian ``N(mean, covariance)`` in dimension 1..3.

    ``convexity_bound`` is the smallest eigenvalue of the precision matrix.
    The normalizer is recomputed by quadrature and cross-checked against
    ``log det(2 pi covariance) / 2``.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    dim = mean.size
    _check_dim(dim)
    if cov.shape != (dim, dim):
        raise InvalidCovarianceError(f"covariance shape {cov.shape} does not match mean of length {dim}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * (1 + np.abs(cov).max())):
        raise InvalidCovarianceError("covariance is not symmetric")
    cov = 0.5 * (cov + cov.T)
    eig = np.linalg.eigvalsh(cov)
    if eig.min() <= 0:
        raise InvalidCovarianceError(f"covariance is not positive definite (eigenvalues {eig})")
    prec = np.linalg.inv(cov)
    prec = 0.5 * (prec + prec.T)

    def value(x):
        c = _points(x, dim) - mean
        return 0.5 * np.einsum("ni,ij,nj->n", c, prec, c)

    def gradient(x):
        return (_points(x, dim) - mean) @ prec

    def hessian(x):
        n = _points(x, dim).shape[0]
        return np.broadcast_to(prec, (n, dim, dim)).copy()

    def hessian_dderiv(x, e):
        n = _points(x, dim).shape[0]
        return np.zeros((n, dim, dim))

    potential = Potential(
        dim, value, gradient, hessian, hessian_dderiv,
        convexity_bound=float(np.linalg.eigvalsh(prec).min()),
        center=mean, scale=float(np.sqrt(eig.max())), min_scale=float(np.sqrt(eig.min())),
    )
    factors = None
    if dim > 1 and np.count_nonzero(cov - np.diag(np.diag(cov))) == 0:
        factors = tuple(make_gaussian([mean[i]], [[cov[i, i]]]) for i in range(dim))
    measure = normalize(potential, label=label or f"N({mean.tolist()}, {cov.tolist()})", gaussian=(mean, cov), factors=factors)
    closed = 0.5 * np.linalg.slogdet(2 * np.pi * cov)[1]
    if abs(measure.potential.log_norm - closed) > CLOSED_FORM_TOLERANCE:
        raise DomainTooSmallError(
            f"quadrature normalizer {measure.potential.log_norm!r} disagrees with closed form {closed!r}"
        )
    return measure


def make_perturbed_gaussian(amplitude, frequency=1.0, *, label=""):
    """1D measure with ``V(x) = x^2/2 + amplitude * cos(frequency * x)``.

    ``|amplitude| <= 0.45``; with frequency 1 the potential stays uniformly
    convex with constant ``1 - |amplitude|``.
    """
    a = float(amplitude)
    w = float(frequency)
    if not abs(a) <= 0.45:
        raise InvalidArgumentError(f"amplitude must satisfy |amplitude| <= 0.45, got {amplitude!r}")
    if not np.isfinite(w):
        raise InvalidArgumentError(f"frequency must be finite, got {frequency!r}")

    def value(x):
        t = _points(x, 1)[:, 0]
        return 0.5 * t * t + a * np.cos(w * t)

    def gradient(x):
        t = _points(x, 1)[:, 0]
        return (t - a * w * np.sin(w * t))[:, None]

    def hessian(x):
        t = _points(x, 1)[:, 0]
        return (1.0 - a * w * w * np.cos(w * t))[:, None, None]

    def hessian_dderiv(x, e):
        t = _points(x, 1)[:, 0]
        return (a * w**3 * np.sin(w * t) * np.asarray(e, dtype=float).reshape(-1)[0])[:, None, None]

    bound = 1.0 - abs(a) * w * w
    potential = Potential(
        1, value, gradient, hessian, hessian_dderiv,
        convexity_bound=bound if bound > 0 else None, center=np.zeros(1), scale=1.0,
        min_scale=1.0 / max(1.0, abs(w)),
    )
    if a == 0.0:
        return make_gaussian([0.0], [[1.0]], label=label or "perturbed(0)")
    return normalize(potential, label=label or f"perturbed({a:g}, {w:g})")


def make_product(factors, *, label=""):
    """Product measure of 1D catalog members."""
    factors = tuple(factors)
    if any(f.dim != 1 for f in factors):
        raise InvalidArgumentError("product factors must be one-dimensional")
    dim = len(factors)
    _check_dim(dim)
    pots = [f.potential for f in factors]

    def value(x):
        x = _points(x, dim)
        return sum(p.value(x[:, i : i + 1]) for i, p in enumerate(pots))

    def gradient(x):
        x = _points(x, dim)
        return np.concatenate([p.gradient(x[:, i : i + 1]) for i, p in enumerate(pots)], axis=1)

    def hessian(x):
        x = _points(x, dim)
        diag = np.stack([p.hessian(x[:, i : i + 1])[:, 0, 0] for i, p in enumerate(pots)], axis=1)
        return diag[:, :, None] * np.eye(dim)

    def hessian_dderiv(x, e):
        x = _points(x, dim)
        e = np.asarray(e, dtype=float)
        diag = np.stack([p.hessian_dderiv(x[:, i : i + 1], e[i : i + 1])[:, 0, 0] for i, p in enumerate(pots)], axis=1)
        return diag[:, :, None] * np.eye(dim)

    bounds = [p.convexity_bound for p in pots]
    potential = Potential(
        dim, value, gradient, hessian, hessian_dderiv,
        convexity_bound=None if any(b is None for b in bounds) else min(bounds),
        center=np.array([f.mean[0] for f in factors]), scale=max(f.scale for f in factors),
        min_scale=min(f.min_scale for f in factors),
    )
    gaussian = None
    if all(f.is_gaussian for f in factors):
        gaussian = (
            np.array([f.gaussian[0][0] for f in factors]),
            np.diag([f.gaussian[1][0, 0] for f in factors]),
        )
    return normalize(potential, label=label or "product(" + ", ".join(f.label for f in factors) + ")",
                     gaussian=gaussian, factors=factors)


def make_gaussian_shift_density(h):
    """Exponential shift ``g(x) = exp(<h, x> - |h|^2 / 2)``.

    Against the standard Gaussian, ``g * gamma`` is ``N(h, Id)``.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    dim = h.size
    _check_dim(dim)
    half_norm = 0.5 * float(h @ h)

    def log_value(x):
        return _points(x, dim) @ h - half_norm

    def log_gradient(x):
        return np.broadcast_to(h, _points(x, dim).shape).copy()

    def log_hessian(x):
        return np.zeros((_points(x, dim).shape[0], dim, dim))

    return RelativeDensity(dim, log_value, log_gradient, log_hessian, label=f"shift({h.tolist()})", shift=h)


def density_ratio(mu, nu):
    """Relative density ``d mu / d nu = exp(W - V)`` of two catalog measures."""
    if mu.dim != nu.dim:
        raise InvalidArgumentError("measures have different dimensions")
    V, W = mu.potential, nu.potential

    def log_value(x):
        return W.value(x) - V.value(x)

    def log_gradient(x):
        return W.gradient(x) - V.gradient(x)

    def log_hessian(x):
        return W.hessian(x) - V.hessian(x)

    return RelativeDensity(mu.dim, log_value, log_gradient, log_hessian, label=f"{mu.label}/{nu.label}", source=mu)


def tilt(nu, g, *, label=""):
    """The probability measure ``g * nu`` (renormalized by quadrature)."""
    if g.dim != nu.dim:
        raise InvalidArgumentError("density and reference measure have different dimensions")
    if g.source is not None:
        return g.source
    if g.shift is not None and nu.is_gaussian:
        m, cov = nu.gaussian
        return make_gaussian(m + cov @ g.shift, cov, label=label or f"{g.label}*{nu.label}")
    W = nu.potential

    def value(x):
        return W.value(x) - g.log_value(x)

    def gradient(x):
        return W.gradient(x) - g.log_gradient(x)

    def hessian(x):
        return W.hessian(x) - g.log_hessian(x)

    def hessian_dderiv(x, e):
        raise NotImplementedError("third derivatives are unavailable for a generic tilt")

    shift = np.zeros(nu.dim) if g.shift is None else nu.covariance @ g.shift
    potential = Potential(
        nu.dim, value, gradient, hessian, hessian_dderiv,
        center=nu.mean + shift, scale=nu.scale, min_scale=nu.min_scale,
    )
    return normalize(potential, label=label or f"{g.label}*{nu.label}")
