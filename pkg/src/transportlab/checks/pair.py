"""A measure pair with its transport map and cached node fields."""

import threading

import numpy as np

from ..measures import default_rule, density_ratio
from ..quadrature import integrate_values


class Pair:
    """``(mu, nu, T)`` plus the integration rule shared by every check.

    Node fields (``T(x)``, ``DT(x)``, potential derivatives, ...) are
    computed once on first use and shared between checks; access is
    serialized by a lock so the pair can be handed to several threads.

    Parameters
    ----------
    mu, nu : ProbabilityMeasure
    transport : TransportMap
        Sends ``mu`` onto ``nu``.
    rule : QuadratureRule, optional
        Defaults to the pair rule of ``mu`` and ``nu``.
    label : str
    """

    def __init__(self, mu, nu, transport, rule=None, *, label="", method=""):
        self.mu = mu
        self.nu = nu
        self.map = transport
        self.rule = rule or default_rule(mu, nu)
        self.label = label or f"{mu.label}->{nu.label}"
        self.method = method or transport.method
        self.x = self.rule.nodes
        self.density = mu.density(self.x)
        self._cache = {}
        self._lock = threading.RLock()

    def cached(self, key, compute):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = compute()
            return self._cache[key]

    def expect(self, values):
        """``int values d mu`` for node values (trailing axes allowed)."""
        values = np.asarray(values, dtype=float)
        dens = self.density.reshape((-1,) + (1,) * (values.ndim - 1))
        out = integrate_values(values * dens, self.rule)
        return float(out) if np.ndim(out) == 0 else out

    def with_rule(self, rule):
        """Same measures and map on a different rule (fresh caches)."""
        return Pair(self.mu, self.nu, self.map, rule, label=self.label, method=self.method)

    @property
    def dim(self):
        return self.mu.dim

    @property
    def ratio(self):
        """Relative density ``g = d mu / d nu``."""
        return self.cached("ratio", lambda: density_ratio(self.mu, self.nu))

    # fields at the nodes
    @property
    def T(self):
        return self.cached("T", lambda: self.map.value(self.x))

    @property
    def DT(self):
        return self.cached("DT", lambda: self.map.jacobian(self.x))

    def dDT(self, axis):
        """Derivative of the Jacobian along coordinate ``axis``."""
        e = np.zeros(self.dim)
        e[axis] = 1.0
        return self.cached(("dDT", axis), lambda: self.map.jacobian_dderiv(self.x, e))

    @property
    def gradV(self):
        return self.cached("gradV", lambda: self.mu.potential.gradient(self.x))

    @property
    def hessV(self):
        return self.cached("hessV", lambda: self.mu.potential.hessian(self.x))

    @property
    def gradW(self):
        return self.cached("gradW", lambda: self.nu.potential.gradient(self.x))

    @property
    def gradW_T(self):
        return self.cached("gradW_T", lambda: self.nu.potential.gradient(self.T))

    @property
    def hessW_T(self):
        return self.cached("hessW_T", lambda: self.nu.potential.hessian(self.T))

    @property
    def log_g(self):
        return self.cached("log_g", lambda: self.nu.potential.value(self.x) - self.mu.potential.value(self.x))

    @property
    def grad_log_g(self):
        return self.cached("grad_log_g", lambda: self.gradW - self.gradV)

    @property
    def fisher(self):
        """``I_mu`` on this pair's rule."""
        return self.cached("fisher", lambda: self.expect(np.einsum("ni,ni->n", self.gradV, self.gradV)))
