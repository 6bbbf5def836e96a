import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from medgeom.distributions import RngStream
from medgeom.simulation import SimulationConfig, generate_replicate

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_columns(seed, n=None, n_range=(10, 100)):
    """(x, m, y) from the study's generating process, optionally at fixed n."""
    cfg = SimulationConfig(n_min=n or n_range[0], n_max=n or n_range[1])
    rep = generate_replicate(RngStream(seed, 0), cfg)
    ds = rep.dataset
    return ds["X"].copy(), ds["M"].copy(), ds["Y"].copy()


def random_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_study():
    """The default 10,000-replicate study under all three frameworks, run once."""
    from medgeom.simulation import run_study

    return run_study(SimulationConfig())
