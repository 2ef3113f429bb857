import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def frozen(name):
    return json.loads((HERE / "frozen" / name).read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def late_data():
    from ivovb.simdgp import generate, random_spec

    return generate(random_spec("late", seed=3, n=1500)).dataset


@pytest.fixture(scope="session")
def late_estimates(late_data):
    from ivovb import LearnerSpec, crossfit_estimate

    return crossfit_estimate(late_data, "late", LearnerSpec(kind="saturated_cells"), K=5, seed=1).estimates


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
