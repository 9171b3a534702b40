import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from transportlab.checks import Pair
from transportlab.measures import (
    make_gaussian, make_gaussian_shift_density, make_perturbed_gaussian, make_product, tilt,
)
from transportlab.transport import build_map

settings.register_profile(
    "repo", deadline=None, max_examples=30, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert."""
    store = request.config.stash[_CRITERIA]

    def report(n, failures, summary):
        status = "FAIL" if failures else "PASS"
        store[n] = f"criterion {n}: {status}  {summary}" + (f"  [{'; '.join(failures[:5])}]" if failures else "")
        assert not failures, failures

    return report


@pytest.fixture(scope="session")
def gamma1():
    return make_gaussian([0.0], [[1.0]])


@pytest.fixture(scope="session")
def gamma2():
    return make_gaussian([0.0, 0.0], np.eye(2))


@pytest.fixture(scope="session")
def pert03():
    return make_perturbed_gaussian(0.3)


@pytest.fixture(scope="session")
def pair_factory():
    """Memoized ``Pair`` construction keyed by a short name."""
    cache = {}

    def make(key, mu, nu, method="auto", **kw):
        if key not in cache:
            cache[key] = Pair(mu, nu, build_map(mu, nu, method, **kw), label=key)
        return cache[key]

    return make


@pytest.fixture(scope="session")
def pairs(gamma1, gamma2, pert03, pair_factory):
    """The pairs most tests need."""
    g4 = make_gaussian([0.0], [[4.0]])
    shift1 = tilt(gamma1, make_gaussian_shift_density([1.0]))
    d41 = make_gaussian([0.0, 0.0], np.diag([4.0, 1.0]))
    corr = make_gaussian([0.0, 0.0], [[2.0, 1.0], [1.0, 2.0]])
    return {
        "var4": pair_factory("var4", g4, gamma1),
        "quarter": pair_factory("quarter", make_gaussian([0.0], [[0.25]]), gamma1),
        "same": pair_factory("same", gamma1, gamma1),
        "pert03": pair_factory("pert03", pert03, gamma1),
        "pert01": pair_factory("pert01", make_perturbed_gaussian(0.1), gamma1),
        "shift1": pair_factory("shift1", shift1, gamma1),
        "diag41": pair_factory("diag41", d41, gamma2),
        "corr_knothe": pair_factory("corr_knothe", corr, gamma2, "knothe"),
        "product": pair_factory("product", make_product([pert03, gamma1]), gamma2, "knothe"),
        "var4_to_pert": pair_factory("var4_to_pert", g4, pert03),
    }


@pytest.fixture(scope="session")
def entropic_diag41(gamma2):
    """Entropic map diag(4,1) -> I2 at eps = 1e-2 (the slow one, built once)."""
    mu = make_gaussian([0.0, 0.0], np.diag([4.0, 1.0]))
    return Pair(mu, gamma2, build_map(mu, gamma2, "sinkhorn", epsilon=1e-2), label="diag41_entropic")
