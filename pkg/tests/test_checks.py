import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from transportlab.checks import (
    CHECK_NAMES, REGISTRY, CheckSpec, Pair, evaluate_status, growth_constant, make_result, run_check, run_suite,
)
from transportlab.checks.core import default_tolerance
from transportlab.errors import RegistryError
from transportlab.measures import make_gaussian, make_gaussian_shift_density, tilt
from transportlab.transport import build_map

ALL = list(CHECK_NAMES)


def run(pair, name, **params):
    return run_check(name, pair, params)


def test_registry_has_sixteen_checks():
    assert len(REGISTRY) == 16
    assert {"MAIN", "FISHER_ID", "TR_ID", "LP_DIR", "THIRD_ORDER"} <= set(REGISTRY)
    assert "Fisher information" in REGISTRY["MAIN"].anchor + REGISTRY["MAIN"].statement
    assert "triangular" in REGISTRY["TR_ID"].statement


@given(st.sampled_from(["identity", "inequality"]), st.floats(-10, 10), st.floats(0, 1))
def test_status_invariant(kind, margin, tol):
    status = evaluate_status(kind, margin, tol)
    expected = abs(margin) <= tol if kind == "identity" else margin >= -tol
    assert (status == "pass") == expected


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_result_fields_consistent(lhs, rhs):
    r = make_result("MAIN", "inequality", lhs, rhs, accuracy_class="exact", params={})
    assert r.margin == lhs - rhs
    assert r.rel_gap == pytest.approx((lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))
    assert r.tolerance == pytest.approx(1e-7 * max(abs(lhs), abs(rhs), 1.0))


def test_tolerance_policy():
    assert default_tolerance("identity", "exact", 2.0, 1.0) == pytest.approx(2e-8)
    assert default_tolerance("identity", "grid", 0.1, 0.1) == pytest.approx(1e-5)
    assert default_tolerance("inequality", "grid", 3.0, 1.0) == pytest.approx(3e-7)
    assert default_tolerance("identity", "approximate", 3.0, 1.0) == 5e-2


@pytest.mark.parametrize("name", ALL)
def test_identity_map_is_trivial(pairs, name):
    r = run(pairs["same"], name)
    assert r.passed, r.note
    if name in ("MAIN", "LP_DIR", "CAFFARELLI", "OPNORM"):
        assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(1.0)


def test_main_examples(pairs):
    r = run(pairs["var4"], "MAIN")
    assert (r.lhs, r.rhs) == (pytest.approx(0.25), pytest.approx(0.25))
    r = run(pairs["pert03"], "MAIN")
    assert r.passed and r.margin > 1e-3


def test_main_rhs_two_ways(pairs):
    # K int ||DT||^2 equals the first FISHER_ID term when D2W = Id and K = 1
    for key in ("var4", "diag41", "pert03"):
        main = run(pairs[key], "MAIN")
        fid = run(pairs[key], "FISHER_ID")
        assert main.rhs == pytest.approx(fid.details["first_term"], rel=1e-8)


def test_fisher_identity_examples(pairs):
    r = run(pairs["diag41"], "FISHER_ID")
    assert r.lhs == pytest.approx(1.25) and r.details["third_order_term"] == pytest.approx(0.0, abs=1e-14)
    r = run(pairs["pert03"], "FISHER_ID")
    assert abs(r.margin) <= 1e-5 * r.lhs


def test_triangular_identity_examples(pairs):
    r = run(pairs["diag41"], "TR_ID")
    assert r.lhs == pytest.approx(1.25) and r.rhs == pytest.approx(1.25)
    r = run(pairs["corr_knothe"], "TR_ID")
    assert r.passed and abs(r.rel_gap) <= 1e-4
    assert r.lhs == pytest.approx(4.0 / 3.0, rel=1e-10)


def test_increment_examples(pairs):
    r = run(pairs["same"], "INCREMENT", t=1.0, e=[1.0])
    assert (r.lhs, r.rhs) == (pytest.approx(0.5), pytest.approx(0.5))
    r = run(pairs["same"], "INCREMENT", t=0.0, e=[1.0])
    assert r.lhs == 0 and r.rhs == 0
    r = run(pairs["pert03"], "INCREMENT", t=0.5)
    assert r.passed and r.margin >= 0
    assert len(run(pairs["diag41"], "INCREMENT").details["cases"]) == 9


def test_gen_talagrand_examples(gamma1, pair_factory, pairs):
    s08 = pair_factory("s08", tilt(gamma1, make_gaussian_shift_density([0.8])), gamma1)
    s03 = pair_factory("s03", tilt(gamma1, make_gaussian_shift_density([0.3])), gamma1)
    r = run_check("GEN_TALAGRAND", s08, {"reference": "s03"}, pairs={"s03": s03})
    assert r.lhs == pytest.approx(0.125) and r.rhs == pytest.approx(0.125)
    r = run_check("GEN_TALAGRAND", s08, {"reference": "s08"}, pairs={"s08": s08})
    assert r.lhs == pytest.approx(0.0, abs=1e-14) and r.rhs == pytest.approx(0.0, abs=1e-14)
    r = run(pairs["shift1"], "GEN_TALAGRAND")
    assert (r.lhs, r.rhs) == (pytest.approx(0.5), pytest.approx(0.5))
    r = run_check("GEN_TALAGRAND", s08, {"reference": "missing"}, pairs={})
    assert not r.passed and "missing" in r.note


def test_talagrand_examples(pairs):
    assert run(pairs["same"], "TALAGRAND").lhs == pytest.approx(0.0, abs=1e-14)
    r = run(pairs["shift1"], "TALAGRAND")
    assert (r.lhs, r.rhs) == (pytest.approx(0.5), pytest.approx(0.5)) and r.passed
    r = run(pairs["pert03"], "TALAGRAND")
    assert r.passed and r.margin > 0


def test_gaussian_reference_checks_on_shift(pairs):
    p = pairs["shift1"]
    r = run(p, "INFDIM_ID")
    assert (r.lhs, r.rhs) == (pytest.approx(1.0), pytest.approx(1.0))
    assert r.details["entropy"] == pytest.approx(0.5)
    r = run(p, "STRONG_LSI")
    assert abs(r.margin) <= 1e-8 and r.passed
    r = run(p, "TAL2")
    assert (r.lhs, r.rhs) == (pytest.approx(1.0), pytest.approx(0.0, abs=1e-14))
    r = run(p, "LSI_EXTREMAL")
    assert r.kind == "identity" and abs(r.margin) <= 1e-8 and r.params["extremal"]
    r = run(p, "NONGAUSS")
    assert (r.lhs, r.rhs) == (pytest.approx(4.0), pytest.approx(0.0, abs=1e-14))
    r = run(p, "QUADGROWTH")
    assert (r.lhs, r.rhs) == (pytest.approx(2.0), pytest.approx(0.0, abs=1e-14))


def test_variance_four_density(pairs):
    # g = d N(0,4) / d gamma, T = x / 2: I = 9/4, 2 Ent = 3 - ln 4, -2 E log det2 = 2 (ln 2 - 1/2), ||DT - I||^2 = 1/4
    p = pairs["var4"]
    r = run(p, "INFDIM_ID")
    assert r.lhs == pytest.approx(2.25)
    assert r.details["entropy"] == pytest.approx(0.5 * (3 - math.log(4)))
    assert r.details["log_det2"] == pytest.approx(math.log(0.5) + 0.5)
    assert r.details["hs_deviation"] == pytest.approx(0.25)
    assert r.passed
    tal2 = run(p, "TAL2")
    assert (tal2.lhs, tal2.rhs) == (pytest.approx(2.25), pytest.approx(0.25))
    q = run(p, "QUADGROWTH")
    assert q.rhs == pytest.approx(0.125) and q.passed


def test_perturbed_gaussian_reference_checks(pairs):
    p = pairs["pert03"]
    infdim = run(p, "INFDIM_ID")
    assert abs(infdim.rel_gap) <= 1e-5
    for name in ("STRONG_LSI", "TAL2", "NONGAUSS", "QUADGROWTH"):
        assert run(p, name).margin > 0
    ext = run(p, "LSI_EXTREMAL")
    assert not ext.params["extremal"] and ext.passed
    assert ext.details["gap"] >= ext.details["required_gap"]


def test_lp_directional_examples(pairs):
    p = pairs["var4"]
    r = run(p, "LP_DIR", p=0)
    assert (r.lhs, r.rhs) == (pytest.approx(0.25), pytest.approx(0.25))
    forms = {c["form"]: c for c in r.details["cases"]}
    assert forms["hessian"]["lhs"] == pytest.approx(0.25)
    assert forms["gradient"]["lhs"] == pytest.approx(0.25)
    r = run(pairs["same"], "LP_DIR", p=3.0)
    assert r.rhs == pytest.approx(1.0) and r.params["r"] == 2.5


def test_caffarelli_examples(pairs):
    r = run(pairs["quarter"], "CAFFARELLI")
    assert (r.lhs, r.rhs) == (pytest.approx(4.0), pytest.approx(4.0))
    assert r.details["sup_opnorm_DT"] == pytest.approx(2.0)
    r = run(pairs["pert03"], "CAFFARELLI")
    assert r.margin >= -1e-6
    assert r.details["points"] > len(pairs["pert03"].x)


def test_opnorm_examples(pairs):
    r = run(pairs["var4"], "OPNORM", r=1)
    assert (r.lhs, r.rhs) == (pytest.approx(0.25), pytest.approx(0.25))
    r = run(pairs["diag41"], "OPNORM", r=1)
    assert (r.lhs, r.rhs) == (pytest.approx(1.0), pytest.approx(1.0))
    assert "squared_variant" in r.details
    r = run(pairs["same"], "OPNORM", r=2)
    assert r.lhs == pytest.approx(1.0) and r.passed


def test_third_order_examples(pairs):
    r = run(pairs["diag41"], "THIRD_ORDER")
    assert r.rhs == 0 and r.margin == pytest.approx(1.25)
    r = run(pairs["pert03"], "THIRD_ORDER")
    assert r.rhs > 0 and r.margin > 0


def test_non_gaussian_target(pairs):
    p = pairs["var4_to_pert"]
    for name in ("MAIN", "FISHER_ID", "INCREMENT", "NONGAUSS", "QUADGROWTH", "LP_DIR", "OPNORM", "TALAGRAND"):
        r = run(p, name)
        assert r.passed, (name, r.note)
    assert run(p, "MAIN").params["K"] == pytest.approx(0.7)
    r = run(p, "INFDIM_ID")
    assert not r.passed and "standard Gaussian" in r.note


def test_growth_constant_of_standard_gaussian(gamma2, pert03):
    assert growth_constant(gamma2) == pytest.approx(1.0, rel=1e-12)
    assert 0 < growth_constant(pert03) < 1


def test_wrong_constant_fails_main(pairs):
    r = run(pairs["var4"], "MAIN", K=4.0)
    assert not r.passed and r.margin <= -0.5


@pytest.mark.parametrize("K", [0.0, -1.0])
def test_nonpositive_constant_is_refused(pairs, K):
    r = run(pairs["var4"], "MAIN", K=K)
    assert not r.passed and "K" in r.note and math.isnan(r.lhs)


def test_quadgrowth_rejects_constant_above_growth(pairs):
    r = run(pairs["var4"], "QUADGROWTH", K=2.0)
    assert not r.passed and "growth" in r.note


def test_admissibility(pairs, entropic_diag41):
    r = run(pairs["corr_knothe"], "MAIN")
    assert not r.passed and "optimal" in r.note
    for name in ("FISHER_ID", "INFDIM_ID", "CAFFARELLI", "THIRD_ORDER", "LSI_EXTREMAL", "TR_ID"):
        assert "not admissible" in run(entropic_diag41, name).note


def test_entropic_main_within_tolerance(entropic_diag41):
    r = run(entropic_diag41, "MAIN")
    assert r.tolerance == 5e-2 and r.passed
    assert r.lhs == pytest.approx(1.25)


def test_refinement_changes_little(pairs):
    p = pairs["pert03"]
    fine = p.with_rule(p.rule.refined())
    for name in ("MAIN", "FISHER_ID", "INFDIM_ID", "STRONG_LSI", "TAL2"):
        a, b = run(p, name), run(fine, name)
        assert b.lhs == pytest.approx(a.lhs, rel=1e-6) and b.rhs == pytest.approx(a.rhs, rel=1e-6)


def test_suite_order_and_isolation(pairs):
    specs = [
        CheckSpec("MAIN", "var4"),
        CheckSpec("MAIN", "var4", {"K": 4.0}),
        CheckSpec("TR_ID", "corr_knothe"),
        CheckSpec("INFDIM_ID", "var4_to_pert"),
        CheckSpec("OPNORM", "diag41", {"r": 2}),
    ]
    results = run_suite(specs, pairs, workers=3)
    assert [r.name for r in results] == [s.name for s in specs]
    assert [r.passed for r in results] == [True, False, True, False, True]
    assert run_suite([], pairs) == []


def test_suite_rejects_unknown_names_before_running(pairs):
    with pytest.raises(RegistryError):
        run_suite([CheckSpec("MAIN", "var4"), CheckSpec("NOPE", "var4")], pairs)


def test_tolerance_override(pairs):
    r = run_check("MAIN", pairs["var4"], {"K": 1.01}, tolerance=0.01)
    assert r.tolerance == 0.01 and r.passed


def test_parallel_and_serial_agree(gamma1):
    mu = make_gaussian([0.0], [[3.0]])
    specs = [CheckSpec(n, "p") for n in ("MAIN", "FISHER_ID", "LP_DIR", "OPNORM", "TAL2")]
    serial = run_suite(specs, {"p": Pair(mu, gamma1, build_map(mu, gamma1))}, workers=1)
    parallel = run_suite(specs, {"p": Pair(mu, gamma1, build_map(mu, gamma1))}, workers=4)
    assert [(r.lhs, r.rhs) for r in serial] == [(r.lhs, r.rhs) for r in parallel]
    assert np.all([r.passed for r in serial])
