"""Triangular (Knothe-Rosenblatt) maps in dimension two.

``T(x) = (T1(x1), T2(x1, x2))``: ``T1`` couples the first marginals by
quantiles, ``T2(x1, .)`` couples the conditional law of ``x2`` given ``x1``
under ``mu`` with the conditional law under ``nu`` given ``T1(x1)``.

Points are processed by rows of equal ``x1`` (the tensor rules produce
exactly such rows), with one pair of conditional tables per row.  The
Jacobian is closed form given ``T``:

* ``d1 T1 = m_mu(x1) / m_nu(T1)`` (marginal densities),
* ``d2 T2 = rho_mu(x2|x1) / rho_nu(T2|T1)``,
* ``d1 T2`` from differentiating the conditional CDFs in their parameter,
  which needs the conditional means of ``d/dx1 log rho`` over half-lines.
"""

import threading
from collections import OrderedDict

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from ..errors import InvalidArgumentError
from ..measures import NODES_PER_SPREAD, default_rule
from ..quadrature import DEFAULT_ORDER, tensor_rule
from ._cdf import LogCdfTable
from .base import TransportMap
from .brenier import TABLE_SPAN, _check_density, brenier_1d, covering_table

FD_STEP = 1e-4
CACHE_ROWS = 8192
COARSE_POINTS = 513


class _Conditionals:
    """Marginal and conditional log-densities of a 2D measure."""

    def __init__(self, measure, radius, min_scale, cells):
        self.V = measure.potential
        self.radius = radius
        self.cells = cells
        self.half_width = TABLE_SPAN * radius
        order = int(np.ceil(NODES_PER_SPREAD * self.half_width / min_scale))
        self.t, self.w = leggauss(max(order, 64))
        self.coarse = np.linspace(-2 * self.half_width, 2 * self.half_width, COARSE_POINTS)
        self._rows = OrderedDict()
        self._lock = threading.Lock()

    def _points(self, x1, s):
        x1 = np.broadcast_to(x1, s.shape)
        return np.stack([x1.ravel(), s.ravel()], axis=1)

    def log_joint(self, x1, s):
        return -self.V.value(self._points(x1, s)).reshape(np.shape(s))

    def dlog_joint(self, x1, s):
        """``(d/dx1, d/ds)`` of the log-density, each shaped like ``s``."""
        g = -self.V.gradient(self._points(x1, s))
        return g[:, 0].reshape(np.shape(s)), g[:, 1].reshape(np.shape(s))

    def centers(self, x1):
        """Conditional modes on a coarse grid, one per ``x1``."""
        x1 = np.asarray(x1, dtype=float)
        s = np.broadcast_to(self.coarse, x1.shape + self.coarse.shape)
        ls = self.log_joint(x1[..., None], s)
        return self.coarse[np.argmax(ls, axis=-1)]

    def marginal(self, x1):
        """``log m(x1)`` and ``d/dx1 log m(x1)``, the conditional mean of ``d/dx1 log rho``."""
        x1 = np.asarray(x1, dtype=float)
        c = self.centers(x1)
        s = c[..., None] + self.half_width * self.t
        lw = np.log(self.half_width * self.w)
        ls = self.log_joint(x1[..., None], s) + lw
        log_m = logsumexp(ls, axis=-1)
        a, _ = self.dlog_joint(x1[..., None], s)
        return log_m, np.sum(np.exp(ls - log_m[..., None]) * a, axis=-1)

    def table(self, x1, targets=None):
        """Conditional table at ``x1`` (cached), widened to cover ``targets``."""
        key = float(x1)
        with self._lock:
            tab = self._rows.get(key)
            if tab is not None:
                self._rows.move_to_end(key)
        if tab is not None and (targets is None or (tab.logit_edges[0] < np.min(targets) and tab.logit_edges[-1] > np.max(targets))):
            return tab
        center = float(self.centers(np.array([key]))[0])

        def lp(s):
            return self.log_joint(key, s)

        def dlp(s):
            return self.dlog_joint(key, s)[1]

        def a(s):
            return self.dlog_joint(key, s)[0]

        half = self.half_width if tab is None else tab.hi - tab.lo
        if targets is None:
            tab = LogCdfTable(lp, dlp, center - half, center + half, self.cells, 4, weight_fn=a)
        else:
            tab = covering_table(lp, dlp, center, half, targets, self.cells, 4, weight_fn=a)
        with self._lock:
            self._rows[key] = tab
            while len(self._rows) > CACHE_ROWS:
                self._rows.popitem(last=False)
        return tab


def _product_map(mu, nu, cdf_grid, rule):
    axis_rule = tensor_rule(1, max(rule.order, DEFAULT_ORDER[1]), rule.radius)
    maps = [brenier_1d(a, b, cdf_grid, rule=axis_rule) for a, b in zip(mu.factors, nu.factors)]
    accuracy = "exact" if all(m.accuracy_class == "exact" for m in maps) else "grid"
    domain = min(m.domain_radius for m in maps)

    def value(x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([m.value(x[:, i : i + 1]) for i, m in enumerate(maps)], axis=1)

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        d = np.stack([m.jacobian(x[:, i : i + 1])[:, 0, 0] for i, m in enumerate(maps)], axis=1)
        return d[:, :, None] * np.eye(2)

    def jacobian_dderiv(x, e):
        x = np.asarray(x, dtype=float)
        e = np.asarray(e, dtype=float)
        d = np.stack([m.jacobian_dderiv(x[:, i : i + 1], e[i : i + 1])[:, 0, 0] for i, m in enumerate(maps)], axis=1)
        return d[:, :, None] * np.eye(2)

    def inverse_value(y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([m.inverse_value(y[:, i : i + 1]) for i, m in enumerate(maps)], axis=1)

    return TransportMap(
        2, "triangular", value, jacobian, jacobian_dderiv, accuracy,
        inverse_value=inverse_value, optimal=True, domain_radius=domain, method="knothe",
        info={"cdf_grid": cdf_grid, "factorized": True},
    )


def knothe_2d(mu, nu, cdf_grid=1024, *, rule=None, factorize=True):
    """Triangular map sending ``mu`` onto ``nu`` in dimension two.

    Parameters
    ----------
    mu, nu : ProbabilityMeasure
    cdf_grid : int
        Cells of every cumulative table.
    rule : QuadratureRule, optional
        Box on which the map is used (defaults to the pair rule); the map is
        defined on twice that box.
    factorize : bool
        For two product measures the triangular map is the pair of 1D
        quantile maps (and is then also the optimal map).  Set to False to
        force the general conditional construction.

    Notes
    -----
    Directional derivatives of the Jacobian are central differences of the
    closed-form Jacobian along the coordinate axes, step
    ``1e-4 (1 + |x_i|)``, combined linearly for general directions.
    """
    if mu.dim != 2 or nu.dim != 2:
        raise InvalidArgumentError("knothe_2d needs two-dimensional measures")
    rule = rule or default_rule(mu, nu)
    if factorize and mu.factors is not None and nu.factors is not None:
        return _product_map(mu, nu, cdf_grid, rule)
    R = rule.radius
    _check_density(mu, rule)
    _check_density(nu, rule)
    min_scale = min(mu.min_scale, nu.min_scale)
    cm = _Conditionals(mu, R, min_scale, cdf_grid)
    cn = _Conditionals(nu, R, min_scale, cdf_grid)

    def lm_mu(s):
        return cm.marginal(s)[0]

    def dlm_mu(s):
        return cm.marginal(s)[1]

    def lm_nu(s):
        return cn.marginal(s)[0]

    def dlm_nu(s):
        return cn.marginal(s)[1]

    span = TABLE_SPAN * R
    marg_mu = LogCdfTable(lm_mu, dlm_mu, -span, span, cdf_grid, 4)
    marg_nu = covering_table(lm_nu, dlm_nu, 0.0, span, marg_mu.logit_edges[[0, -1]], cdf_grid, 4)
    shift1 = marg_nu.log_z - marg_mu.log_z
    domain = 2.0 * R

    def _rows(x1):
        x1u, inv = np.unique(x1, return_inverse=True)
        y1u = marg_nu.quantile_logit(marg_mu.logit(x1u))
        lmu_u = cm.marginal(x1u)[0]
        lnu_u = cn.marginal(y1u)[0]
        d11 = np.exp(lmu_u - lnu_u + shift1)
        return x1u, inv.reshape(-1), y1u, d11

    def _evaluate(x, with_jacobian):
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        x1u, inv, y1u, d11u = _rows(x[:, 0])
        y = np.empty_like(x)
        jac = np.zeros((n, 2, 2)) if with_jacobian else None
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(x1u.size + 1))
        for j in range(x1u.size):
            idx = order[bounds[j] : bounds[j + 1]]
            x2 = x[idx, 1]
            tab_mu = cm.table(x1u[j])
            if with_jacobian:
                log_f, log_s, a_left, a_right = tab_mu.log_cdf(x2, with_means=True)
            else:
                log_f, log_s = tab_mu.log_cdf(x2)
            tau = log_f - log_s
            tab_nu = cn.table(y1u[j], targets=tau)
            y2 = tab_nu.quantile_logit(tau)
            y[idx, 0] = y1u[j]
            y[idx, 1] = y2
            if not with_jacobian:
                continue
            l_mu = cm.log_joint(x1u[j], x2) - tab_mu.log_z
            l_nu = cn.log_joint(y1u[j], y2) - tab_nu.log_z
            d22 = np.exp(l_mu - l_nu)
            _, _, b_left, b_right = tab_nu.log_cdf(y2, with_means=True)
            d11 = d11u[j]
            left = log_f - tab_mu.log_z <= np.log(0.5)
            lead = np.where(left, np.exp(log_f - tab_mu.log_z), -np.exp(log_s - tab_mu.log_z))
            da_mu = np.where(left, a_left, a_right) - tab_mu.mean_total
            da_nu = np.where(left, b_left, b_right) - tab_nu.mean_total
            d21 = lead * np.exp(-l_nu) * (da_mu - da_nu * d11)
            jac[idx, 0, 0] = d11
            jac[idx, 1, 0] = d21
            jac[idx, 1, 1] = d22
        return y, jac

    def value(x):
        return _evaluate(x, False)[0]

    def jacobian(x):
        return _evaluate(x, True)[1]

    cache = {}
    cache_lock = threading.Lock()

    def axis_derivatives(x):
        x = np.ascontiguousarray(x, dtype=float)
        key = (x.shape, hash(x.tobytes()))
        with cache_lock:
            hit = cache.get(key)
        if hit is not None:
            return hit
        out = []
        for i in range(2):
            h = FD_STEP * (1.0 + np.abs(x[:, i]))
            step = np.zeros_like(x)
            step[:, i] = h
            out.append((jacobian(x + step) - jacobian(x - step)) / (2 * h)[:, None, None])
        with cache_lock:
            cache.clear()
            cache[key] = out
        return out

    def jacobian_dderiv(x, e):
        e = np.asarray(e, dtype=float).reshape(-1)
        d1, d2 = axis_derivatives(x)
        return e[0] * d1 + e[1] * d2

    return TransportMap(
        2, "triangular", value, jacobian, jacobian_dderiv, "grid",
        optimal=False, domain_radius=domain, method="knothe",
        info={"cdf_grid": cdf_grid, "factorized": False},
    )
