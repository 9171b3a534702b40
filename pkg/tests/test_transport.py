import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from transportlab import calculus
from transportlab.errors import ConvergenceError, DomainError, InvalidArgumentError
from transportlab.measures import make_gaussian, make_perturbed_gaussian, make_product
from transportlab.transport import (
    brenier_1d, brenier_gaussian, build_map, function_battery, increment_map, knothe_2d, pushforward_defect,
    sinkhorn_2d,
)


def closed_form_matrix(a, b):
    """Oracle: A = a^{-1/2} (a^{1/2} b a^{1/2})^{1/2} a^{-1/2}."""
    r = calculus.matrix_sqrt(a)
    ri = np.linalg.inv(r)
    return ri @ calculus.matrix_sqrt(r @ b @ r) @ ri


def central_diff(f, x, i, h=1e-5):
    e = np.zeros(x.shape[1])
    e[i] = h
    return (f(x + e) - f(x - e)) / (2 * h)


@given(st.floats(0.3, 3), st.floats(0.3, 3), st.floats(-0.8, 0.8), st.floats(0.3, 3), st.floats(-0.8, 0.8))
def test_gaussian_map_pushes_covariance(s1, s2, rho, t, off):
    a = np.array([[s1, rho * np.sqrt(s1 * s2)], [rho * np.sqrt(s1 * s2), s2]])
    b = np.array([[t, off * np.sqrt(t)], [off * np.sqrt(t), 1.0]])
    mu, nu = make_gaussian([0.5, 0.0], a), make_gaussian([0.0, -1.0], b)
    T = brenier_gaussian(mu, nu)
    A = T.info["matrix"]
    np.testing.assert_allclose(A, A.T, atol=1e-12)
    assert np.linalg.eigvalsh(A).min() > 0
    np.testing.assert_allclose(A @ a @ A, b, atol=1e-10)
    np.testing.assert_allclose(T.value(np.array([[0.5, 0.0]])), [[0.0, -1.0]], atol=1e-12)
    assert T.optimal and T.accuracy_class == "exact"


def test_gaussian_map_matches_oracle():
    a, b = np.diag([4.0, 1.0]), np.array([[1.0, 0.3], [0.3, 2.0]])
    T = brenier_gaussian(make_gaussian([0, 0], a), make_gaussian([0, 0], b))
    np.testing.assert_allclose(T.info["matrix"], closed_form_matrix(a, b), atol=1e-13)
    x = np.array([[1.0, 2.0], [-0.5, 0.25]])
    np.testing.assert_allclose(T.jacobian(x), np.broadcast_to(T.info["matrix"], (2, 2, 2)))
    np.testing.assert_allclose(T.jacobian_dderiv(x, [1.0, 0.0]), 0.0)
    np.testing.assert_allclose(T.inverse_value(T.value(x)), x, atol=1e-13)


def test_grid_quantile_map_against_closed_form(gamma1):
    mu = make_gaussian([0.0], [[4.0]])
    T = brenier_1d(mu, gamma1, closed_form=False)
    assert T.accuracy_class == "grid"
    x = np.linspace(-20, 20, 81)[:, None]
    np.testing.assert_allclose(T.value(x), 0.5 * x, atol=1e-11)
    np.testing.assert_allclose(T.jacobian(x)[:, 0, 0], 0.5, rtol=1e-11)
    np.testing.assert_allclose(T.jacobian_dderiv(x, [1.0]), 0.0, atol=1e-11)


def test_perturbed_quantile_map(pert03, gamma1):
    T = build_map(pert03, gamma1)
    assert T.method == "brenier_1d" and T.optimal
    rule = pert03.rule
    assert pushforward_defect(T, pert03, gamma1, rule) < 1e-10
    x = np.linspace(-8, 8, 33)[:, None]
    np.testing.assert_allclose(central_diff(T.value, x, 0)[:, 0], T.jacobian(x)[:, 0, 0], rtol=1e-7)
    np.testing.assert_allclose(central_diff(T.jacobian, x, 0)[:, 0, 0], T.jacobian_dderiv(x, [1.0])[:, 0, 0],
                               rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(T.inverse_value(T.value(x)), x, atol=1e-10)


@given(st.lists(st.floats(-15, 15), min_size=2, max_size=20, unique=True))
def test_quantile_map_is_increasing(pts):
    mu, nu = make_perturbed_gaussian(0.3), make_gaussian([0.0], [[1.0]])
    T = _cached_perturbed_map(mu, nu)
    x = np.sort(np.array(pts))[:, None]
    dy = np.diff(T.value(x)[:, 0])
    assert np.all(dy >= 0)
    # strict once the points are resolvable in floating point
    assert np.all(dy[np.diff(x[:, 0]) > 1e-8] > 0)


_MAPS = {}


def _cached_perturbed_map(mu, nu):
    if "p" not in _MAPS:
        _MAPS["p"] = brenier_1d(mu, nu)
    return _MAPS["p"]


def test_map_domain_is_enforced(pert03, gamma1):
    T = build_map(pert03, gamma1)
    with pytest.raises(DomainError):
        increment_map(T, [1.0], 1.0, np.array([[T.domain_radius]]))


def test_increment_with_zero_step(pert03, gamma1):
    T = build_map(pert03, gamma1)
    disp, sq = increment_map(T, [1.0], 0.0, np.array([[0.3], [1.0]]))
    assert np.all(disp == 0) and np.all(sq == 0)


def test_knothe_against_cholesky_oracle(gamma2):
    cov = np.array([[2.0, 1.0], [1.0, 2.0]])
    mu = make_gaussian([0.0, 0.0], cov)
    T = knothe_2d(mu, gamma2)
    # the increasing triangular map N(0, L L^T) -> N(0, I) is x -> L^{-1} x
    Linv = np.linalg.inv(np.linalg.cholesky(cov))
    rng = np.random.default_rng(1)
    x = rng.uniform(-10, 10, size=(40, 2))
    np.testing.assert_allclose(T.value(x), x @ Linv.T, atol=1e-10)
    np.testing.assert_allclose(T.jacobian(x), np.broadcast_to(Linv, (40, 2, 2)), atol=1e-8)
    np.testing.assert_allclose(T.jacobian_dderiv(x, [0.6, 0.8]), 0.0, atol=1e-6)
    assert T.triangular and not T.optimal and T.accuracy_class == "grid"
    assert pushforward_defect(T, mu, gamma2, mu.rule) < 1e-8


def test_knothe_product_path_matches_general_path(pert03, gamma1, gamma2):
    mu = make_product([pert03, gamma1])
    fast = knothe_2d(mu, gamma2)
    assert fast.info["factorized"] and fast.optimal
    slow = knothe_2d(mu, gamma2, factorize=False)
    assert not slow.info["factorized"]
    x = np.array([[0.3, -1.0], [2.0, 0.5], [-4.0, 3.0]])
    np.testing.assert_allclose(slow.value(x), fast.value(x), atol=1e-10)
    np.testing.assert_allclose(slow.jacobian(x), fast.jacobian(x), atol=1e-8)
    np.testing.assert_allclose(slow.jacobian_dderiv(x, [1.0, 0.0]), fast.jacobian_dderiv(x, [1.0, 0.0]), atol=1e-5)


def test_sinkhorn_reproduces_closed_form(entropic_diag41):
    pair = entropic_diag41
    T = pair.map
    assert T.kind == "entropic" and T.accuracy_class == "approximate" and T.optimal
    assert T.info["violation"] < 1e-9 and T.info["epsilon"] == 1e-2
    exact = brenier_gaussian(pair.mu, pair.nu)
    err = np.sqrt(pair.expect(np.sum((pair.T - exact.value(pair.x)) ** 2, axis=1)))
    assert err < 5e-2
    np.testing.assert_allclose(pair.expect(pair.DT), np.diag([0.5, 1.0]), atol=5e-2)


def test_sinkhorn_error_shrinks_with_epsilon(entropic_diag41):
    fine = entropic_diag41
    coarse_map = sinkhorn_2d(fine.mu, fine.nu, epsilon=2e-2)
    exact = brenier_gaussian(fine.mu, fine.nu)
    x = fine.x

    def l2(T):
        return np.sqrt(fine.expect(np.sum((T.value(x) - exact.value(x)) ** 2, axis=1)))

    assert l2(fine.map) < l2(coarse_map)


def test_sinkhorn_jacobian_derivative_matches_finite_differences(entropic_diag41):
    T = entropic_diag41.map
    x = np.array([[0.5, 0.2], [-1.0, 0.7]])
    for i in range(2):
        e = np.eye(2)[i]
        np.testing.assert_allclose(T.jacobian_dderiv(x, e), central_diff(T.jacobian, x, i, h=1e-4),
                                   rtol=1e-4, atol=1e-5)


def test_sinkhorn_failures(gamma2):
    mu = make_gaussian([0.0, 0.0], np.diag([4.0, 1.0]))
    with pytest.raises(ConvergenceError) as info:
        sinkhorn_2d(mu, gamma2, epsilon=0.05, max_iter=2)
    assert info.value.violation > 1e-9
    with pytest.raises(InvalidArgumentError):
        sinkhorn_2d(mu, gamma2, epsilon=0.0)
    with pytest.raises(InvalidArgumentError):
        sinkhorn_2d(make_gaussian([0.0], [[1.0]]), make_gaussian([0.0], [[1.0]]))


def test_build_map_dispatch(gamma1, gamma2, pert03):
    assert build_map(make_gaussian([0.0], [[2.0]]), gamma1).method == "gaussian"
    assert build_map(pert03, gamma1).method == "brenier_1d"
    assert build_map(make_product([pert03, gamma1]), gamma2).method == "knothe"
    with pytest.raises(InvalidArgumentError):
        build_map(pert03, gamma1, "magic")


def test_function_battery_size():
    assert len(function_battery(1)) == 5
    assert len(function_battery(2)) == 11
    assert len(function_battery(3)) == 21
