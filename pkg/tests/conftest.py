import numpy as np
import pytest

from censcore import synthetic


@pytest.fixture(scope="session")
def experiment():
    return synthetic.generate_experiment()


@pytest.fixture(scope="session")
def bundle(experiment):
    return synthetic.run_experiment_tables(experiment=experiment)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES):
            terminalreporter.write_line(line)
