import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sagin_slicing.config import ScenarioConfig  # noqa: E402
from sagin_slicing.slices import AllocationDecision  # noqa: E402
from sagin_slicing.topology import init_topology  # noqa: E402


@pytest.fixture
def config():
    return ScenarioConfig()


@pytest.fixture
def small_config():
    return ScenarioConfig(K=(2, 2, 2), E=1, T=3, hidden=(8, 8), batch_central=2,
                          batch_distributed=2)


def random_decision(config, rng, state=None, density=0.7):
    """Arbitrary (possibly infeasible) binary decision with random powers."""
    K, C, N = config.K_total, config.n_components, config.N
    cls = np.repeat(np.arange(3), config.K)
    xi = np.zeros((K, N))
    phi = np.zeros((K, C))
    p = rng.uniform(0, 5, size=(K, C, N))
    for k in range(K):
        if rng.random() < density:
            xi[k, rng.integers(N)] = 1
            phi[k, rng.integers(C)] = 1
    eta = rng.dirichlet(np.ones(3), size=3).T
    rho = rng.dirichlet(np.ones(3), size=3).T
    uav = rng.uniform(0, config.area_side_m, size=(config.V, 2))
    return AllocationDecision(xi, phi, p, eta, rho, uav, cls)


def random_scenario(config, rng):
    state = init_topology(config, int(rng.integers(2**31)))
    return state


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
