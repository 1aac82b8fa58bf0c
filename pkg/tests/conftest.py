import numpy as np
import pytest

from voxrecon.geometry import orbit_camera


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cam16():
    return orbit_camera(35.0, 25.0, 2.2, target=(0.0, 0.0, 0.0), width=16, height=16)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reproduction (minutes)")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[k])
