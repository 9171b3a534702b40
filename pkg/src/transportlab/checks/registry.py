"""Named registry of checks and the single-check runner."""

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import InvalidArgumentError, RegistryError, TransportLabError
from . import library as lib
from .core import IDENTITY, INEQUALITY, failed_result, make_result

STANDARD_GAUSSIAN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CheckEntry:
    """Registry metadata for one check.

    ``anchor`` is a short name of the mathematical statement; ``statement``
    spells it out.  ``requires`` lists admissibility conditions on the pair:
    ``optimal`` (gradient-of-convex map), ``triangular``, ``smooth`` (no
    entropic maps), ``gaussian_reference`` (target is the standard
    Gaussian).
    """

    name: str
    kind: str
    anchor: str
    statement: str
    params: dict
    function: Callable
    requires: tuple = ()
    growth: bool = False
    extra: dict = field(default_factory=dict)


def _entry(name, kind, anchor, statement, params, function, requires=("optimal",), **kw):
    return CheckEntry(name, kind, anchor, statement, params, function, tuple(requires), **kw)


_K = {"K": "float > 0, optional; overrides the convexity bound of the target potential"}
_E = {"e": "list of d floats, optional; direction (default: coordinate axes and the diagonal)"}

REGISTRY = {
    e.name: e
    for e in [
        _entry("MAIN", INEQUALITY, "Fisher information bound on the second derivatives of the transport potential",
               "The Fisher information of mu dominates the weighted Hessian energy of the Brenier potential: "
               "I_mu = int |grad V|^2 dmu >= K int ||D^2 Phi||_HS^2 dmu, when D^2 W >= K Id.",
               dict(_K), lib.check_main),
        _entry("FISHER_ID", IDENTITY, "Fisher information identity for optimal maps",
               "I_mu = int Tr[D^2Phi D^2W(grad Phi) D^2Phi] dmu "
               "+ sum_i int ||(D^2Phi)^(-1/2) d_i D^2Phi (D^2Phi)^(-1/2)||_HS^2 dmu.",
               {}, lib.check_fisher_identity, ("optimal", "smooth")),
        _entry("TR_ID", IDENTITY, "Fisher information identity for triangular maps",
               "For a triangular (Knothe) map T: I_mu = int Tr[DT^T D^2W(T) DT] dmu "
               "+ sum_k int |grad log d_k T_k|^2 dmu.",
               {}, lib.check_triangular_identity, ("triangular", "smooth")),
        _entry("INCREMENT", INEQUALITY, "Increment bound for the optimal map",
               "int (V(x + t e) - V(x)) dmu >= (K/2) int |T(x + t e) - T(x)|^2 dmu.",
               {**_K, **_E, "t": "float, optional; step (default sweeps 0.1, 0.5, 1)"}, lib.check_increment),
        _entry("GEN_TALAGRAND", INEQUALITY, "Transport-entropy inequality between two densities",
               "int f log(f/g) dnu >= (K/2) int |T_f - T_g|^2 f dnu, with T_f, T_g the optimal maps "
               "of f nu and g nu onto nu.",
               {**_K, "reference": "pair id, optional; the pair providing g (default g = 1)"},
               lib.check_gen_talagrand),
        _entry("TALAGRAND", INEQUALITY, "Transport-entropy inequality",
               "Ent_nu g >= (K/2) W_2^2(nu, g nu); for the standard Gaussian, Ent g >= W_2^2 / 2.",
               dict(_K), lib.check_talagrand),
        _entry("INFDIM_ID", IDENTITY, "Gaussian Fisher information identity with the Fredholm-Carleman determinant",
               "I_gamma g = 2 Ent_gamma g - 2 int log det2(D^2Phi - Id) g dgamma + int ||D^2Phi - Id||_HS^2 g dgamma "
               "+ sum_k int Tr[((D^2Phi)^(-1) d_k D^2Phi)^2] g dgamma.",
               {}, lib.check_infdim_identity, ("optimal", "smooth", "gaussian_reference")),
        _entry("STRONG_LSI", INEQUALITY, "Strengthened Gaussian log-Sobolev inequality",
               "I_gamma g >= 2 Ent_gamma g - 2 int log det2(D^2Phi - Id) g dgamma.",
               {}, lib.check_strong_lsi, ("optimal", "gaussian_reference")),
        _entry("TAL2", INEQUALITY, "Gaussian Hessian energy bound",
               "I_gamma g >= int ||D^2Phi - Id||_HS^2 g dgamma.",
               {}, lib.check_tal2, ("optimal", "gaussian_reference")),
        _entry("LSI_EXTREMAL", IDENTITY, "Extremals of the Gaussian log-Sobolev inequality",
               "I_gamma g = 2 Ent_gamma g exactly for exponential shifts g = exp(<h,x> - |h|^2/2); "
               "other densities show a strict gap.",
               {}, lib.check_lsi_extremal, ("optimal", "smooth", "gaussian_reference")),
        _entry("NONGAUSS", INEQUALITY, "Hessian deviation bound for a non-Gaussian reference",
               "2 int |grad log g|^2 dmu + 2 int |grad W - grad W(grad Phi)|^2 dmu "
               ">= int Tr[(D^2Phi - Id) D^2W(grad Phi) (D^2Phi - Id)] dmu, mu = g nu.",
               {}, lib.check_nongauss),
        _entry("QUADGROWTH", INEQUALITY, "Hessian deviation bound under quadratic-like growth",
               "(2/K) int g log g dnu + int |grad g|^2 / g dnu >= (K/2) int ||D^2Phi - Id||_HS^2 g dnu, "
               "where W(x) - W(y) - <grad W(y), x - y> >= (K/2) |grad W(x) - grad W(y)|^2.",
               dict(_K), lib.check_quadratic_growth, growth=True),
        _entry("LP_DIR", INEQUALITY, "Directional L^r bounds on second derivatives",
               "For r = (p+2)/2: K ||Phi_ee^2||_r <= ||(V_ee)_+||_r and K ||Phi_ee^2||_r <= ((p+4)/4) ||V_e^2||_r.",
               {**_K, **_E, "p": "float >= 0, default 0"}, lib.check_lp_directional),
        _entry("CAFFARELLI", INEQUALITY, "Contraction bound for the optimal map",
               "K sup Phi_ee^2 <= sup (V_ee)_+, suprema over the quadrature nodes and a denser probe grid.",
               {**_K, **_E}, lib.check_caffarelli, ("optimal", "smooth")),
        _entry("OPNORM", INEQUALITY, "Operator-norm L^r bound on the Hessian of the potential",
               "K (int ||D^2Phi||^(2r) dmu)^(1/r) <= (int ||(D^2V)_+||^r dmu)^(1/r), r >= 1.",
               {**_K, "r": "float >= 1, default 1"}, lib.check_opnorm),
        _entry("THIRD_ORDER", INEQUALITY, "Third-derivative bound for the transport potential",
               "int |grad V|^2 dmu >= 2 sqrt(K) int (sum_i ||d_i D^2Phi||_HS^2)^(1/2) dmu.",
               dict(_K), lib.check_third_order, ("optimal", "smooth")),
    ]
}

CHECK_NAMES = tuple(REGISTRY)


def get_check(name):
    try:
        return REGISTRY[name]
    except KeyError:
        raise RegistryError(f"unknown check {name!r}; known checks: {', '.join(CHECK_NAMES)}") from None


def is_standard_gaussian(measure):
    if not measure.is_gaussian:
        return False
    mean, cov = measure.gaussian
    return bool(np.allclose(mean, 0.0, atol=STANDARD_GAUSSIAN_TOLERANCE)
                and np.allclose(cov, np.eye(measure.dim), atol=STANDARD_GAUSSIAN_TOLERANCE))


def admissibility(entry, pair):
    """Reason the check cannot run on ``pair``, or ``None``."""
    m = pair.map
    for req in entry.requires:
        if req == "optimal" and not m.optimal:
            return f"{entry.name} needs an optimal (gradient) map; {m.method} is not"
        if req == "triangular" and not m.triangular:
            return f"{entry.name} needs a triangular map; {m.method} is {m.kind}"
        if req == "smooth" and m.kind == "entropic":
            return f"{entry.name} needs exact or grid derivatives, not an entropic map"
        if req == "gaussian_reference" and not is_standard_gaussian(pair.nu):
            return f"{entry.name} needs the standard Gaussian as target measure"
    return None


def resolve_constant(entry, pair, params):
    """Convexity constant for the check and a note on where it came from."""
    if "K" in params and params["K"] is not None:
        K, source = float(params["K"]), "override"
    else:
        K, source = pair.nu.convexity_bound, "convexity bound"
    if entry.growth:
        growth = pair.cached("growth_constant", lambda: lib.growth_constant(pair.nu))
        if source == "override":
            if K > growth * (1 + 1e-9):
                raise InvalidArgumentError(f"K = {K:g} exceeds the sampled growth constant {growth:g}")
        else:
            K = min(K, growth) if K is not None else growth
            source = "convexity bound and sampled growth"
    return K, source


def _clean(params):
    out = {}
    for k, v in params.items():
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, np.generic):
            v = v.item()
        out[k] = v
    return out


def run_check(name, pair, params=None, tolerance=None, *, pairs=None):
    """Run one registered check on ``pair`` and return a :class:`CheckResult`.

    Errors during evaluation and inadmissible pairs become ``fail`` results
    carrying a note; only an unknown ``name`` raises.
    """
    entry = get_check(name)
    params = dict(params or {})
    base = {"pair": pair.label, "mu": pair.mu.label, "nu": pair.nu.label, "method": pair.method}
    start = time.perf_counter()

    def finish(result):
        result.runtime_ms = 1e3 * (time.perf_counter() - start)
        return result

    reason = admissibility(entry, pair)
    if reason:
        return finish(failed_result(name, entry.kind, {**base, **_clean(params)}, f"not admissible: {reason}"))
    try:
        K, source = resolve_constant(entry, pair, params)
        if K is None or not np.isfinite(K) or K <= 0:
            raise InvalidArgumentError(f"convexity constant K = {K} is not positive; the check needs K > 0")
        call_params = {k: v for k, v in params.items() if k not in ("K", "reference")}
        if name == "GEN_TALAGRAND":
            ref = params.get("reference")
            reference = None
            if ref is not None:
                if pairs is None or ref not in pairs:
                    raise InvalidArgumentError(f"reference pair {ref!r} is not defined")
                reference = pairs[ref]
                if not reference.map.optimal:
                    raise InvalidArgumentError(f"reference pair {ref!r} does not carry an optimal map")
            outcome = entry.function(pair, K, call_params, reference=reference)
        else:
            outcome = entry.function(pair, K, call_params)
    except (TransportLabError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return finish(failed_result(name, entry.kind, {**base, **_clean(params)},
                                    f"{type(exc).__name__}: {exc}"))
    shown = {**base, **_clean(params), "K": K, "K_source": source, **_clean(outcome.params)}
    result = make_result(name, outcome.kind, outcome.lhs, outcome.rhs, accuracy_class=pair.map.accuracy_class,
                         params=shown, tolerance=tolerance if tolerance is not None else outcome.tolerance,
                         details=outcome.details)
    return finish(result)
