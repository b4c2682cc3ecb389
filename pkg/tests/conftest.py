import numpy as np
import pytest

from netloc.harness import GenerationSpec, generate_network
from netloc.network import NetworkInstance

# exact distance 2, bounds widened by 1e-3 on each side
ANALYTIC_LO = 1.999**2
ANALYTIC_UP = 2.001**2


def make_two_node(lower=0.5, upper=2.0) -> NetworkInstance:
    return NetworkInstance(2, np.array([0]), np.array([1]), np.array([lower**2]), np.array([upper**2]))


def make_analytic() -> NetworkInstance:
    return NetworkInstance(2, np.array([0]), np.array([1]), np.array([ANALYTIC_LO]), np.array([ANALYTIC_UP]))


def random_instance(rng: np.random.Generator, n: int | None = None, density: float | None = None):
    n = int(rng.integers(3, 16)) if n is None else n
    density = float(rng.uniform(0.3, 1.0)) if density is None else density
    spec = GenerationSpec(n, density, float(rng.uniform(0.0, 0.15)), rng_seed=int(rng.integers(2**31)))
    return generate_network(spec)


@pytest.fixture
def two_node():
    return make_two_node()


@pytest.fixture
def analytic():
    return make_analytic()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = {}


@pytest.fixture
def record():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def _record(number, passed, detail):
        _CRITERIA[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
