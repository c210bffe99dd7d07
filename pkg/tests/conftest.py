import numpy as np
import pytest

from noiselab.harness.config import ExperimentConfig
from noiselab.schedule import DiffusionSchedule
from noiselab.testbed import MixtureCondition, NoisePredictor, load_conditions


@pytest.fixture(scope="session")
def suite():
    return load_conditions()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def std_normal_pipeline():
    """d=1 standard-normal data on the β = (0.1, 0.2, 0.3, 0.4) schedule."""
    from noiselab.sampler import Pipeline

    sched = DiffusionSchedule.from_betas([0.1, 0.2, 0.3, 0.4])
    return Pipeline(NoisePredictor(MixtureCondition.standard_normal(1), sched), sched)


@pytest.fixture
def default_cfg():
    return ExperimentConfig()


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
