import os

import pytest

from spincat.pipeline import RunConfig, run_analysis


def pytest_addoption(parser):
    parser.addoption("--run-extended", action="store_true", default=False,
                     help="run long cases (full Mn12 sectors)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-extended") or \
            os.environ.get("SPINCAT_EXTENDED") == "1":
        return
    skip = pytest.mark.skip(
        reason="extended: pass --run-extended or set SPINCAT_EXTENDED=1")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def ring_result():
    """One shared alternating-ring scaling run."""
    from spincat.pipeline import ring_scaling
    return ring_scaling(RunConfig(model="mn6"))


@pytest.fixture(scope="session")
def analysis():
    """Shared, cached run_analysis results keyed by config."""
    cache = {}

    def get(model, m1=None, m2=None, **kwargs):
        key = (model, m1, m2, tuple(sorted(kwargs.items())))
        if key not in cache:
            cache[key] = run_analysis(
                RunConfig(model=model, m1=m1, m2=m2, **kwargs))
        return cache[key]

    return get
