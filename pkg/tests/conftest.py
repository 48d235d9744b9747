import time

import numpy as np
import pytest

from uavbeam.lrnet.train import TrainConfig, train_default
from uavbeam.scenario import ScenarioConfig

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def default_cfg():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def trained(default_cfg):
    """Default model trained once per session on 9000 windows (about two minutes)."""
    t0 = time.perf_counter()
    model, history, data = train_default(default_cfg, TrainConfig(seed=0))
    return model, history, data, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
