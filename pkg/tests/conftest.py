import numpy as np
import pytest

from fpslfa import DatasetSplit, generate_synthetic, split_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_split() -> DatasetSplit:
    matrix, _ = generate_synthetic(50, 40, 3, 0.3, noise_std=0.05, seed=3)
    return split_dataset(matrix, split_seed=3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
