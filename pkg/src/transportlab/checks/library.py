"""The individual checks.

Each function takes a :class:`~transportlab.checks.pair.Pair`, the
convexity constant ``K`` and a parameter dict, and returns an
:class:`Outcome` with independently computed sides.  Admissibility
(optimal map, triangular map, Gaussian reference, ``K > 0``) is enforced by
the registry before these run.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import calculus
from ..errors import InvalidArgumentError
from ..quadrature import tensor_rule
from ..transport import increment_map
from .core import IDENTITY, IDENTITY_TOLERANCE, INEQUALITY, scale_of

INCREMENT_STEPS = (0.1, 0.5, 1.0)
PROBE_FACTOR = 3
PROBE_CAP = 90_000
EXTREMAL_THRESHOLD = 1e-6
GROWTH_SAMPLE = 9


@dataclass
class Outcome:
    lhs: float
    rhs: float
    kind: str = INEQUALITY
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    tolerance: float = None


def directions(dim, e=None):
    """Unit directions to test: ``e`` if given, else the axes and the diagonal."""
    if e is not None:
        e = np.atleast_1d(np.asarray(e, dtype=float))
        if e.size != dim or not np.linalg.norm(e) > 0:
            raise InvalidArgumentError(f"direction {e.tolist()} is not a nonzero vector of length {dim}")
        return [e / np.linalg.norm(e)]
    out = [np.eye(dim)[i] for i in range(dim)]
    if dim > 1:
        out.append(np.ones(dim) / np.sqrt(dim))
    return out


def _quad(A, v):
    return np.einsum("nij,i,j->n", A, v, v)


def _worst(candidates):
    """The candidate with the smallest relative margin."""
    return min(candidates, key=lambda c: (c["lhs"] - c["rhs"]) / scale_of(c["lhs"], c["rhs"]))


def _hs_sq(A):
    return np.sum(A * A, axis=(-2, -1))


def _first_term(pair):
    """``int Tr[DT^T D2W(T) DT] d mu``."""
    DT = pair.DT
    return pair.expect(np.einsum("nki,nkl,nli->n", DT, pair.hessW_T, DT))


def _third_order_terms(pair):
    """``int ||DT^{-1/2} d_i DT DT^{-1/2}||_HS^2 d mu`` for each axis ``i``."""
    inv_root = calculus.matrix_inv_sqrt(pair.DT)
    out = []
    for i in range(pair.dim):
        M = inv_root @ pair.dDT(i) @ inv_root
        out.append(pair.expect(_hs_sq(M)))
    return out


def check_main(pair, K, params):
    lhs = pair.fisher
    rhs = K * pair.expect(_hs_sq(pair.DT))
    details = {}
    if pair.map.accuracy_class != "approximate":
        DT = pair.DT
        excess = pair.hessW_T - K * np.eye(pair.dim)
        third = _third_order_terms(pair)
        details = {
            "dw_excess": pair.expect(np.einsum("nki,nkl,nli->n", DT, excess, DT)),
            "third_order_term": float(sum(third)),
        }
    return Outcome(lhs, rhs, details=details)


def check_fisher_identity(pair, K, params):
    first = _first_term(pair)
    third = _third_order_terms(pair)
    return Outcome(pair.fisher, first + sum(third), kind=IDENTITY,
                   details={"first_term": first, "third_order_term": float(sum(third)),
                            "third_order_by_axis": [float(v) for v in third]})


def check_triangular_identity(pair, K, params):
    first = _first_term(pair)
    DT = pair.DT
    diag = np.einsum("nkk->nk", DT)
    log_terms = []
    for k in range(pair.dim):
        grad = np.stack([pair.dDT(j)[:, k, k] for j in range(pair.dim)], axis=1) / diag[:, k : k + 1]
        log_terms.append(pair.expect(np.einsum("ni,ni->n", grad, grad)))
    return Outcome(pair.fisher, first + sum(log_terms), kind=IDENTITY,
                   details={"first_term": first, "log_derivative_terms": [float(v) for v in log_terms]})


def check_increment(pair, K, params):
    steps = [float(params["t"])] if "t" in params else list(INCREMENT_STEPS)
    V = pair.mu.potential
    v0 = V.value(pair.x)
    cases = []
    for e in directions(pair.dim, params.get("e")):
        for t in steps:
            shifted = pair.x + t * e
            lhs = pair.expect(V.value(shifted) - v0)
            _, sq = increment_map(pair.map, e, t, pair.x, base=pair.T)
            cases.append({"e": e.tolist(), "t": t, "lhs": lhs, "rhs": 0.5 * K * pair.expect(sq)})
    worst = _worst(cases)
    return Outcome(worst["lhs"], worst["rhs"], params={"e": worst["e"], "t": worst["t"]},
                   details={"cases": cases})


def check_gen_talagrand(pair, K, params, reference=None):
    """``f = d mu / d nu`` from ``pair``, ``g`` from ``reference`` (default ``g = 1``)."""
    x = pair.x
    if reference is None:
        log_ratio = pair.nu.potential.value(x) - pair.mu.potential.value(x)
        Tg = x
    else:
        if reference.nu is not pair.nu and reference.nu.label != pair.nu.label:
            raise InvalidArgumentError("GEN_TALAGRAND needs both pairs to share the reference measure")
        log_ratio = reference.mu.potential.value(x) - pair.mu.potential.value(x)
        reference.map.check_domain(x)
        Tg = reference.map.value(x)
    lhs = pair.expect(log_ratio)
    diff = pair.T - Tg
    rhs = 0.5 * K * pair.expect(np.einsum("ni,ni->n", diff, diff))
    return Outcome(lhs, rhs)


def check_talagrand(pair, K, params):
    disp = pair.x - pair.T
    return Outcome(pair.expect(pair.log_g), 0.5 * K * pair.expect(np.einsum("ni,ni->n", disp, disp)))


def _gaussian_terms(pair):
    def compute():
        DT = pair.DT
        eye = np.eye(pair.dim)
        glg = pair.grad_log_g
        terms = {
            "fisher": pair.expect(np.einsum("ni,ni->n", glg, glg)),
            "entropy": pair.expect(pair.log_g),
            "log_det2": pair.expect(calculus.log_det2(DT)),
            "hs_deviation": pair.expect(_hs_sq(DT - eye)),
        }
        inv = np.linalg.inv(DT)
        third = 0.0
        if pair.map.accuracy_class != "approximate":
            for k in range(pair.dim):
                M = inv @ pair.dDT(k)
                third += pair.expect(np.einsum("nij,nji->n", M, M))
        terms["third_order"] = float(third)
        return terms

    return pair.cached("gaussian_terms", compute)


def check_infdim_identity(pair, K, params):
    s = _gaussian_terms(pair)
    rhs = 2 * s["entropy"] - 2 * s["log_det2"] + s["hs_deviation"] + s["third_order"]
    return Outcome(s["fisher"], rhs, kind=IDENTITY, details=dict(s))


def check_strong_lsi(pair, K, params):
    s = _gaussian_terms(pair)
    return Outcome(s["fisher"], 2 * s["entropy"] - 2 * s["log_det2"],
                   details={"entropy": s["entropy"], "log_det2": s["log_det2"]})


def check_tal2(pair, K, params):
    s = _gaussian_terms(pair)
    return Outcome(s["fisher"], s["hs_deviation"])


def check_lsi_extremal(pair, K, params):
    """Equality ``I = 2 Ent`` for shifts; otherwise a strict gap of ten tolerances."""
    s = _gaussian_terms(pair)
    deviation = float(np.max(calculus.hs_norm(pair.DT - np.eye(pair.dim))))
    lhs, two_ent = s["fisher"], 2 * s["entropy"]
    details = {"sup_hs_deviation": deviation, "gap": lhs - two_ent}
    if deviation <= EXTREMAL_THRESHOLD:
        return Outcome(lhs, two_ent, kind=IDENTITY, details=details, params={"extremal": True})
    accuracy = pair.map.accuracy_class
    rel = IDENTITY_TOLERANCE.get(accuracy, 5e-2)
    strict = 10 * rel * scale_of(lhs, two_ent)
    details["required_gap"] = strict
    return Outcome(lhs, two_ent + strict, kind=INEQUALITY, details=details, params={"extremal": False})


def check_nongauss(pair, K, params):
    glg = pair.grad_log_g
    dW = pair.gradW - pair.gradW_T
    lhs = 2 * pair.expect(np.einsum("ni,ni->n", glg, glg)) + 2 * pair.expect(np.einsum("ni,ni->n", dW, dW))
    D = pair.DT - np.eye(pair.dim)
    rhs = pair.expect(np.einsum("nki,nkl,nli->n", D, pair.hessW_T, D))
    return Outcome(lhs, rhs)


def growth_constant(nu, center=None):
    """Largest ``K`` with ``W(x) - W(y) - <grad W(y), x - y> >= K/2 |grad W(x) - grad W(y)|^2``
    over a fixed sample of point pairs around the bulk of ``nu``."""
    W = nu.potential
    sd = np.sqrt(np.diag(nu.covariance))
    axes = [nu.mean[i] + sd[i] * np.linspace(-3, 3, GROWTH_SAMPLE) for i in range(nu.dim)]
    pts = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    w, gw = W.value(pts), W.gradient(pts)
    i, j = np.triu_indices(len(pts), 1)
    i, j = np.concatenate([i, j]), np.concatenate([j, i])
    num = w[i] - w[j] - np.einsum("ni,ni->n", gw[j], pts[i] - pts[j])
    den = 0.5 * np.sum((gw[i] - gw[j]) ** 2, axis=1)
    ok = den > 1e-300
    return float(np.min(num[ok] / den[ok]))


def check_quadratic_growth(pair, K, params):
    s = _gaussian_terms(pair)
    lhs = (2.0 / K) * s["entropy"] + s["fisher"]
    rhs = 0.5 * K * s["hs_deviation"]
    return Outcome(lhs, rhs)


def check_lp_directional(pair, K, params):
    p = float(params.get("p", 0.0))
    if p < 0:
        raise InvalidArgumentError(f"p must be >= 0, got {p}")
    r = (p + 2.0) / 2.0
    cases = []
    for e in directions(pair.dim, params.get("e")):
        phi_ee = _quad(pair.DT, e)
        v_ee = _quad(pair.hessV, e)
        v_e = pair.gradV @ e
        rhs = K * calculus.lp_norm_values(phi_ee**2, pair.density, r, pair.rule)
        first = calculus.lp_norm_values(np.maximum(v_ee, 0.0), pair.density, r, pair.rule)
        second = (p + 4.0) / 4.0 * calculus.lp_norm_values(v_e**2, pair.density, r, pair.rule)
        cases.append({"e": e.tolist(), "form": "hessian", "lhs": first, "rhs": rhs})
        cases.append({"e": e.tolist(), "form": "gradient", "lhs": second, "rhs": rhs})
    worst = _worst(cases)
    return Outcome(worst["lhs"], worst["rhs"], params={"p": p, "r": r, "e": worst["e"], "form": worst["form"]},
                   details={"cases": cases})


def probe_points(pair):
    """Nodes of a denser rule on the same box (about ``3x`` per axis, capped)."""
    rule = pair.rule
    order = min(PROBE_FACTOR * rule.order, int(PROBE_CAP ** (1.0 / rule.dim)))
    return tensor_rule(rule.dim, order, rule.radius).nodes


def check_caffarelli(pair, K, params):
    def fields():
        probe = probe_points(pair)
        DT = np.concatenate([pair.DT, pair.map.jacobian(probe)])
        hessV = np.concatenate([pair.hessV, pair.mu.potential.hessian(probe)])
        return DT, hessV

    DT, hessV = pair.cached("sup_fields", fields)
    cases = []
    for e in directions(pair.dim, params.get("e")):
        lhs = float(np.max(np.maximum(_quad(hessV, e), 0.0)))
        rhs = K * float(np.max(_quad(DT, e) ** 2))
        cases.append({"e": e.tolist(), "lhs": lhs, "rhs": rhs})
    worst = _worst(cases)
    sup_op = float(np.max(calculus.op_norm(DT)))
    sup_hess = float(np.max(np.maximum(calculus.sym_spectrum(hessV).eigenvalues[:, -1], 0.0)))
    details = {"cases": cases, "sup_opnorm_DT": sup_op, "contraction_bound": float(np.sqrt(sup_hess / K)),
               "points": int(len(DT))}
    return Outcome(worst["lhs"], worst["rhs"], params={"e": worst["e"]}, details=details)


def check_opnorm(pair, K, params):
    r = float(params.get("r", 1.0))
    if r < 1:
        raise InvalidArgumentError(f"r must be >= 1, got {r}")
    op_DT = calculus.op_norm(pair.DT)
    op_V = calculus.op_norm(calculus.positive_part(pair.hessV))
    lhs = calculus.lp_norm_values(op_V, pair.density, r, pair.rule)
    rhs = K * calculus.lp_norm_values(op_DT**2, pair.density, r, pair.rule)
    details = {"squared_variant": {"lhs": pair.expect(op_V**2), "rhs": K * pair.expect(op_DT**2),
                                   "informational": True}}
    return Outcome(lhs, rhs, params={"r": r}, details=details)


def check_third_order(pair, K, params):
    total = sum(_hs_sq(pair.dDT(i)) for i in range(pair.dim))
    return Outcome(pair.fisher, 2.0 * np.sqrt(K) * pair.expect(np.sqrt(total)))

