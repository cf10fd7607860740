import sys
import warnings

import numpy as np
import pytest

import nlreg
from nlreg.engine import synthesize


@pytest.fixture(scope="session")
def solved():
    """Memoized ``synthesize`` results keyed by (fixture, order)."""
    cache = {}

    def get(name, order, **opts):
        key = (name, order, tuple(sorted(opts.items())))
        if key not in cache:
            spec = nlreg.load_fixture(name)
            with warnings.catch_warnings():
                warnings.simplefilter("error", RuntimeWarning)
                sol, cond = synthesize(spec, order, **opts)
            cache[key] = (spec, sol, cond)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for i in sorted(results):
            terminalreporter.write_line(results[i])
