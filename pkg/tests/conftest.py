import os
from collections import OrderedDict

import numpy as np
import pytest

from shapecat.dataset_io import BinaryImage
from shapecat.harness import make_synthetic_dataset

_criteria = OrderedDict()


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if call.when == "setup" and call.excinfo is not None:
        outcome = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"
    elif call.when == "call":
        outcome = "PASS" if call.excinfo is None else (
            "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL")
    else:
        return
    _criteria.setdefault(name, []).append((item.name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, results in _criteria.items():
        outcomes = {o for _, o in results}
        if "FAIL" in outcomes:
            verdict = "FAIL"
        elif outcomes == {"SKIP"}:
            verdict = "SKIP"
        else:
            verdict = "PASS"
        detail = ", ".join(f"{t}={o}" for t, o in results if o != "PASS") or f"{len(results)} checks"
        terminalreporter.write_line(f"{verdict:4}  {name}  ({detail})")


@pytest.fixture
def sample_image():
    # rows 0110 / 1111 / 0010
    return BinaryImage.from_rows(["0110", "1111", "0010"])


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic") / "data"
    make_synthetic_dataset(root, n_per_class=50, seed=0)
    return root


def random_binary(rng, max_side=30, density=None):
    h, w = rng.integers(1, max_side + 1, size=2)
    p = rng.uniform(0.05, 0.95) if density is None else density
    return BinaryImage((rng.random((h, w)) < p).astype(np.uint8))


def dataset_config():
    """Experiment config pointing at user-supplied silhouettes, or None."""
    from shapecat.harness import ExperimentConfig

    if os.environ.get("SHAPECAT_CONFIG"):
        return ExperimentConfig.load(os.environ["SHAPECAT_CONFIG"])
    if os.environ.get("SHAPECAT_DATASET"):
        return ExperimentConfig(dataset_root=os.environ["SHAPECAT_DATASET"])
    return None
