import pytest

from quenchlab.core import ExperimentConfig
from quenchlab.ic import example_A, example_B
from quenchlab.integrate import run

ACCEPTANCE_LINES = []


def experiment(factory):
    spec, ic = factory()
    cfg = ExperimentConfig(problem=spec, ic=ic, N=124, tau0=1e-6, tau1=1e-6,
                           tau_min=1e-9, epsilon_quench=1e-4)
    rec, rep = run(cfg)
    return cfg, rec, rep


@pytest.fixture(scope="session")
def run_A():
    return experiment(example_A)


@pytest.fixture(scope="session")
def run_B():
    return experiment(example_B)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
