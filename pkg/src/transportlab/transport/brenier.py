"""Optimal maps in closed form (Gaussian pairs) and by quantile coupling (1D)."""

import numpy as np

from ..calculus import matrix_inv_sqrt, matrix_sqrt
from ..errors import DomainTooSmallError, InvalidArgumentError, UnderflowError
from ..measures import default_rule
from ._cdf import LogCdfTable
from .base import TransportMap

DENSITY_FLOOR = 1e-300
TABLE_SPAN = 2.5  # table half-width in units of the box radius
MAX_WIDENINGS = 4


def _affine(mean_mu, mean_nu, A, *, kind, method):
    A = np.array(A, dtype=float)
    A.setflags(write=False)
    dim = A.shape[0]
    A_inv = np.linalg.inv(A)

    def value(x):
        return mean_nu + (np.asarray(x, dtype=float) - mean_mu) @ A.T

    def jacobian(x):
        return np.broadcast_to(A, (np.asarray(x).shape[0], dim, dim)).copy()

    def jacobian_dderiv(x, e):
        return np.zeros((np.asarray(x).shape[0], dim, dim))

    def inverse_value(y):
        return mean_mu + (np.asarray(y, dtype=float) - mean_nu) @ A_inv.T

    return TransportMap(
        dim, kind, value, jacobian, jacobian_dderiv, "exact",
        inverse_value=inverse_value, optimal=True, method=method, info={"matrix": A},
    )


def gaussian_map_matrix(cov_mu, cov_nu):
    """``A`` with ``A cov_mu A = cov_nu``, symmetric positive definite."""
    root = matrix_sqrt(cov_mu)
    inv_root = matrix_inv_sqrt(cov_mu)
    A = inv_root @ matrix_sqrt(root @ cov_nu @ root) @ inv_root
    return 0.5 * (A + A.T)


def brenier_gaussian(mu, nu):
    """Closed-form optimal map ``T(x) = m_nu + A (x - m_mu)`` between Gaussians."""
    if mu.dim != nu.dim:
        raise InvalidArgumentError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if not (mu.is_gaussian and nu.is_gaussian):
        raise InvalidArgumentError("brenier_gaussian needs two Gaussian measures")
    (m_mu, c_mu), (m_nu, c_nu) = mu.gaussian, nu.gaussian
    return _affine(m_mu, m_nu, gaussian_map_matrix(c_mu, c_nu), kind="gaussian_linear", method="gaussian")


def _check_density(measure, rule):
    lo = float(np.min(-measure.potential.value(rule.nodes)))
    if lo < np.log(DENSITY_FLOOR):
        raise UnderflowError(f"density of {measure.label} drops to exp({lo:.1f}) inside the box")


def covering_table(logpdf, dlogpdf, center, half_width, targets, cells, q, weight_fn=None):
    """Build a table around ``center`` wide enough that its edge logits bracket ``targets``."""
    lo_t, hi_t = float(np.min(targets)), float(np.max(targets))
    for _ in range(MAX_WIDENINGS + 1):
        table = LogCdfTable(logpdf, dlogpdf, center - half_width, center + half_width, cells, q, weight_fn)
        if table.logit_edges[0] < lo_t and table.logit_edges[-1] > hi_t:
            return table
        half_width *= 2.0
    raise DomainTooSmallError("could not widen the cumulative table enough to cover the target quantiles")


def brenier_1d(mu, nu, cdf_grid=1024, *, rule=None, closed_form=True):
    """Monotone rearrangement ``T = F_nu^{-1} o F_mu`` in dimension one.

    Parameters
    ----------
    mu, nu : ProbabilityMeasure
        One-dimensional.
    cdf_grid : int
        Cells of the cumulative tables.
    rule : QuadratureRule, optional
        The box on which the map will be used; defaults to the pair rule.
        The map is defined on twice that box.
    closed_form : bool
        Use the affine formula when both measures are Gaussian.

    Notes
    -----
    ``T' = rho_mu(x) / rho_nu(T(x))`` and
    ``T'' = T' (l_mu'(x) - l_nu'(T) T')`` with ``l = log rho`` are evaluated
    in closed form from the potentials; only ``T`` itself comes from the
    tables.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise InvalidArgumentError("brenier_1d needs one-dimensional measures")
    if closed_form and mu.is_gaussian and nu.is_gaussian:
        (m_mu, c_mu), (m_nu, c_nu) = mu.gaussian, nu.gaussian
        return _affine(m_mu, m_nu, np.sqrt(c_nu / c_mu), kind="optimal_1d", method="brenier_1d")
    rule = rule or default_rule(mu, nu)
    R = rule.radius
    _check_density(mu, rule)
    _check_density(nu, rule)
    Vm, Vn = mu.potential, nu.potential

    def lmu(s):
        return -Vm.value(s.reshape(-1, 1)).reshape(s.shape)

    def dlmu(s):
        return -Vm.gradient(s.reshape(-1, 1)).reshape(s.shape)

    def lnu(s):
        return -Vn.value(s.reshape(-1, 1)).reshape(s.shape)

    def dlnu(s):
        return -Vn.gradient(s.reshape(-1, 1)).reshape(s.shape)

    tab_mu = LogCdfTable(lmu, dlmu, -TABLE_SPAN * R, TABLE_SPAN * R, cdf_grid, 8)
    tab_nu = covering_table(lnu, dlnu, 0.0, TABLE_SPAN * R, tab_mu.logit_edges[[0, -1]], cdf_grid, 8)
    shift = tab_nu.log_z - tab_mu.log_z
    domain = 2.0 * R

    def _forward(x):
        x = np.asarray(x, dtype=float)
        t = x[:, 0]
        y = tab_nu.quantile_logit(tab_mu.logit(t))
        d1 = np.exp(lmu(t) - lnu(y) + shift)
        return t, y, d1

    def value(x):
        _, y, _ = _forward(x)
        return y[:, None]

    def jacobian(x):
        _, _, d1 = _forward(x)
        return d1[:, None, None]

    def jacobian_dderiv(x, e):
        t, y, d1 = _forward(x)
        d2 = d1 * (dlmu(t) - dlnu(y) * d1)
        return (d2 * float(np.asarray(e).reshape(-1)[0]))[:, None, None]

    def inverse_value(y):
        y = np.asarray(y, dtype=float)[:, 0]
        return tab_mu.quantile_logit(tab_nu.logit(y))[:, None]

    return TransportMap(
        1, "optimal_1d", value, jacobian, jacobian_dderiv, "grid",
        inverse_value=inverse_value, optimal=True, domain_radius=domain, method="brenier_1d",
        info={"cdf_grid": cdf_grid},
    )
