"""Result records and tolerance policy for the verification checks."""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

IDENTITY_TOLERANCE = {"exact": 1e-8, "grid": 1e-5}
INEQUALITY_TOLERANCE = 1e-7
APPROXIMATE_TOLERANCE = 5e-2

IDENTITY = "identity"
INEQUALITY = "inequality"


def scale_of(lhs, rhs):
    return max(abs(lhs), abs(rhs), 1.0)


def default_tolerance(kind, accuracy_class, lhs, rhs):
    """Absolute margin tolerance for one result.

    Entropic (``approximate``) maps get a flat ``5e-2``.  Otherwise identities
    use ``1e-8`` (exact maps) or ``1e-5`` (grid maps) and inequalities
    ``1e-7``, each times ``max(|lhs|, |rhs|, 1)``.
    """
    if accuracy_class == "approximate":
        return APPROXIMATE_TOLERANCE
    rel = IDENTITY_TOLERANCE[accuracy_class] if kind == IDENTITY else INEQUALITY_TOLERANCE
    return rel * scale_of(lhs, rhs)


@dataclass
class CheckResult:
    """One evaluated inequality or identity.

    ``margin = lhs - rhs`` is oriented so that the asserted statement reads
    ``lhs >= rhs`` (inequalities) or ``lhs == rhs`` (identities).
    ``tolerance`` is absolute.  ``details`` carries decompositions and
    informational side values; ``note`` explains failures.
    """

    name: str
    kind: str
    lhs: float
    rhs: float
    margin: float
    rel_gap: float
    tolerance: float
    status: str
    params: dict = field(default_factory=dict)
    runtime_ms: float = 0.0
    note: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        return asdict(self)


def evaluate_status(kind, margin, tolerance):
    if not (math.isfinite(margin) and math.isfinite(tolerance)):
        return "fail"
    if kind == IDENTITY:
        return "pass" if abs(margin) <= tolerance else "fail"
    return "pass" if margin >= -tolerance else "fail"


def make_result(name, kind, lhs, rhs, *, accuracy_class, params, tolerance=None, details=None, note=""):
    lhs = float(lhs)
    rhs = float(rhs)
    margin = lhs - rhs
    tol = default_tolerance(kind, accuracy_class, lhs, rhs) if tolerance is None else float(tolerance)
    return CheckResult(
        name=name, kind=kind, lhs=lhs, rhs=rhs, margin=margin, rel_gap=margin / scale_of(lhs, rhs),
        tolerance=tol, status=evaluate_status(kind, margin, tol), params=dict(params),
        note=note, details=dict(details or {}),
    )


def failed_result(name, kind, params, note):
    nan = float("nan")
    return CheckResult(name=name, kind=kind, lhs=nan, rhs=nan, margin=nan, rel_gap=nan, tolerance=nan,
                       status="fail", params=dict(params), note=note)


@dataclass
class CheckSpec:
    """A request to run one registered check on one measure pair.

    Attributes
    ----------
    name : str
        Registry name, e.g. ``MAIN``.
    pair : str
        Id of the pair (measures and map) to run on.
    params : dict
        Check parameters: ``e`` (direction), ``p``, ``r``, ``t``, ``K``
        (overrides the convexity constant), ``reference`` (second pair for
        ``GEN_TALAGRAND``).
    tolerance : float, optional
        Absolute tolerance replacing the default policy.
    """

    name: str
    pair: str
    params: dict = field(default_factory=dict)
    tolerance: Optional[float] = None
