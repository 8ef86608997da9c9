import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pose_ds import BuildParams, build_model
from pose_ds.synthetic import GENERATORS


@pytest.fixture(scope="session")
def demos():
    """The five synthetic demos, raw (not normalized), N=200."""
    return {name: gen() for name, gen in GENERATORS.items()}


@pytest.fixture(scope="session")
def models(demos):
    """Models fitted once per session on all five demos."""
    return {name: build_model(demo) for name, demo in demos.items()}


@pytest.fixture(scope="session")
def helix_model(models):
    return models["helix"]


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


def pytest_terminal_summary(terminalreporter):
    from _verdicts import LINES

    if LINES:
        terminalreporter.section("acceptance")
        for line in LINES:
            terminalreporter.write_line(line)
