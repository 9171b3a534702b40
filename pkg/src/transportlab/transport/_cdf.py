"""Log-space cumulative distribution tables for 1D densities.

A table covers ``[lo, hi]`` with ``cells`` equal cells, each integrated by
a ``q``-point Gauss-Legendre rule.  Left and right cumulative masses are
accumulated separately in log space (``log F`` from the left, ``log S``
from the right) so both tails keep full relative precision; masses beyond
the table ends are Laplace estimates ``exp(l(e)) / |l'(e)|``.

Quantile matching between two tables works on the logit
``log F - log S``, which is strictly increasing and never saturates.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import DomainError, DomainTooSmallError

NEWTON_STEPS = 40


def _logsumexp_rows(a):
    top = np.max(a, axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.sum(np.exp(a - safe[:, None]), axis=1)) + safe


def _log_partial(logpdf, a, b, t, w, weight_fn=None):
    """``log int_a^b exp(l)`` (and optionally the ``weight_fn``-mean) per row."""
    half = 0.5 * (b - a)
    s = a[:, None] + half[:, None] * (t[None, :] + 1.0)
    ls = logpdf(s)
    with np.errstate(divide="ignore"):
        logw = np.log(np.abs(half))[:, None] + np.log(w)[None, :]
    log_mass = _logsumexp_rows(ls + logw)
    if weight_fn is None:
        return log_mass, None
    with np.errstate(invalid="ignore"):
        p = np.exp(ls + logw - log_mass[:, None])
    mean = np.sum(np.nan_to_num(p) * weight_fn(s), axis=1)
    return log_mass, mean


class LogCdfTable:
    """Cumulative table of an unnormalized 1D log-density.

    Parameters
    ----------
    logpdf : callable
        Vectorized ``l(s)``; any array shape in, same shape out.
    dlogpdf : callable
        Vectorized ``l'(s)``, used for the tail estimates.
    lo, hi : float
        Table ends.  ``l'`` must be positive at ``lo`` and negative at ``hi``.
    cells : int
    q : int
        Gauss-Legendre nodes per cell.
    weight_fn : callable, optional
        Extra field ``a(s)``; when given the table also stores the
        conditional means of ``a`` on ``s < e_k`` and ``s > e_k`` so that
        derivatives of the CDF with respect to a parameter of ``l`` are
        available (see :meth:`log_cdf`).
    """

    def __init__(self, logpdf, dlogpdf, lo, hi, cells=1024, q=8, weight_fn=None):
        self.logpdf = logpdf
        self.dlogpdf = dlogpdf
        self.weight_fn = weight_fn
        self.t, self.w = leggauss(q)
        self.edges = np.linspace(lo, hi, cells + 1)
        self.lo, self.hi = float(lo), float(hi)
        a, b = self.edges[:-1], self.edges[1:]
        log_cell, cell_mean = _log_partial(logpdf, a, b, self.t, self.w, weight_fn)

        slopes = dlogpdf(self.edges[[0, -1]])
        if not (slopes[0] > 0 and slopes[1] < 0):
            raise DomainTooSmallError(f"density is not decaying at the table ends [{lo:g}, {hi:g}]")
        ends = logpdf(self.edges[[0, -1]])
        log_left_tail = ends[0] - np.log(slopes[0])
        log_right_tail = ends[1] - np.log(-slopes[1])

        log_f = np.logaddexp.accumulate(np.concatenate([[log_left_tail], log_cell]))
        log_s = np.logaddexp.accumulate(np.concatenate([[log_right_tail], log_cell[::-1]]))[::-1]
        self.log_f = log_f
        self.log_s = log_s
        mid = cells // 2
        self.log_z = float(np.logaddexp(log_f[mid], log_s[mid]))
        self.logit_edges = log_f - log_s
        if not np.all(np.diff(self.logit_edges) > 0):
            raise DomainTooSmallError("cumulative table is not strictly increasing; density underflows")
        self.dlogit_edges = np.exp(logpdf(self.edges) - log_f) + np.exp(logpdf(self.edges) - log_s)

        if weight_fn is not None:
            # conditional means of a over s < e_k (A) and s > e_k (B)
            # (running weighted means; python floats keep the loops cheap)
            frac = np.exp(log_cell - log_f[1:]).tolist()
            cm = cell_mean.tolist()
            A = [float(weight_fn(self.edges[:1])[0])]
            for fk, ck in zip(frac, cm):
                A.append(A[-1] + fk * (ck - A[-1]))
            frac = np.exp(log_cell - log_s[:-1]).tolist()
            B = [float(weight_fn(self.edges[-1:])[0])]
            for fk, ck in zip(reversed(frac), reversed(cm)):
                B.append(B[-1] + fk * (ck - B[-1]))
            self.mean_left = A = np.array(A)
            self.mean_right = B = np.array(B[::-1])
            self.mean_total = float(A[mid] + np.exp(log_s[mid] - self.log_z) * (B[mid] - A[mid]))

    def _cells(self, x):
        if np.any(x < self.lo) or np.any(x > self.hi):
            bad = x[(x < self.lo) | (x > self.hi)][0]
            raise DomainError(f"point {bad!r} outside the cumulative table [{self.lo:g}, {self.hi:g}]")
        k = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(k, 0, self.edges.size - 2)

    def log_cdf(self, x, *, with_means=False):
        """Unnormalized ``(log F(x), log S(x))``; optionally the partial means of ``a``."""
        x = np.asarray(x, dtype=float)
        k = self._cells(x)
        a, b = self.edges[k], self.edges[k + 1]
        wf = self.weight_fn if with_means else None
        log_l, mean_l = _log_partial(self.logpdf, a, x, self.t, self.w, wf)
        log_r, mean_r = _log_partial(self.logpdf, x, b, self.t, self.w, wf)
        log_f = np.logaddexp(self.log_f[k], log_l)
        log_s = np.logaddexp(self.log_s[k + 1], log_r)
        if not with_means:
            return log_f, log_s
        wl = np.exp(log_l - log_f)
        wr = np.exp(log_r - log_s)
        mean_f = self.mean_left[k] + wl * (np.nan_to_num(mean_l) - self.mean_left[k])
        mean_s = self.mean_right[k + 1] + wr * (np.nan_to_num(mean_r) - self.mean_right[k + 1])
        return log_f, log_s, mean_f, mean_s

    def logit(self, x):
        log_f, log_s = self.log_cdf(x)
        return log_f - log_s

    def quantile_logit(self, tau):
        """Solve ``logit(y) = tau``.

        Cubic Hermite interpolation of the inverse between table edges gives
        the starting point; safeguarded Newton steps inside the bracketing
        cell polish it to round-off.
        """
        tau = np.asarray(tau, dtype=float)
        le = self.logit_edges
        if np.any(tau < le[0]) or np.any(tau > le[-1]):
            raise DomainError("target quantile lies beyond the cumulative table; enlarge the table")
        k = np.clip(np.searchsorted(le, tau, side="right") - 1, 0, le.size - 2)
        lo, hi = self.edges[k].copy(), self.edges[k + 1].copy()
        t0, t1 = le[k], le[k + 1]
        dt = t1 - t0
        u = (tau - t0) / dt
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        y = h00 * lo + h10 * dt / self.dlogit_edges[k] + h01 * hi + h11 * dt / self.dlogit_edges[k + 1]
        y = np.clip(y, lo, hi)
        active = np.ones(y.shape, dtype=bool)
        for _ in range(NEWTON_STEPS):
            yi = y[active]
            log_f, log_s = self.log_cdf(yi)
            resid = (log_f - log_s) - tau[active]
            ly = self.logpdf(yi)
            slope = np.exp(ly - log_f) + np.exp(ly - log_s)
            lo_i, hi_i = lo[active], hi[active]
            lo_i = np.where(resid < 0, yi, lo_i)
            hi_i = np.where(resid > 0, yi, hi_i)
            step = resid / slope
            new = yi - step
            outside = ~((new >= lo_i) & (new <= hi_i))
            new = np.where(outside, 0.5 * (lo_i + hi_i), new)
            # quadratic convergence: once a Newton step is below 1e-10 the
            # updated point is exact to round-off
            done = ((~outside) & (np.abs(step) <= 1e-10 * (1.0 + np.abs(yi)))) | (resid == 0)
            y[active] = new
            lo[active], hi[active] = lo_i, hi_i
            idx = np.flatnonzero(active)
            active[idx[done]] = False
            if not active.any():
                break
        return y
