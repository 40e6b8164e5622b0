import json
import os

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from boojum.core import from_pseudo_observations
from boojum.scenarios import CANONICAL

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# stationary points of the MAP objective, mpmath.findroot on the digamma
# equations at 30 digits (independent of boojum.specialfn)
SCENARIO_MODES = {
    "S1": (58.6164458354224995631750597347, 25.1201829651676870978618471829),
    "S3": (1.95780321461579286700462047847, 0.794949009702206654576100221043),
}

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def reference_values():
    with open(os.path.join(DATA, "reference_values.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def scenario_hypers():
    return {name: from_pseudo_observations(obs) for name, obs in CANONICAL.items()}


def simplex_vectors(dimension, low=0.02):
    """Interior simplex points with every component at least about ``low / dimension``."""
    return st.lists(st.floats(low, 1.0), min_size=dimension, max_size=dimension).map(
        lambda xs: np.asarray(xs) / np.sum(xs)
    )


def observation_sets(dimension, min_size=1, max_size=8):
    return st.lists(simplex_vectors(dimension), min_size=min_size, max_size=max_size).map(np.array)


def random_proper_observations(rng, dimension, n):
    """``n`` Dirichlet(1) draws kept away from the boundary; distinct with probability one."""
    obs = rng.dirichlet(np.ones(dimension), size=n)
    obs = np.clip(obs, 1e-6, None)
    return obs / obs.sum(axis=1, keepdims=True)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
