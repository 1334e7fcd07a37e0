"""Shared fixtures: named targets, seeded generators and a state-file writer."""
import numpy as np
import pytest

from core.states import complex_pair, ghz_state, w_state
from data.persistence import save_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ghz3():
    return ghz_state(3)


@pytest.fixture
def w3():
    return w_state(3)


@pytest.fixture
def cpair():
    return complex_pair()


@pytest.fixture
def state_file(tmp_path):
    """Write a PureState to tmp_path and return the path as a string."""

    def _write(psi, name="state.json"):
        path = tmp_path / name
        save_state(path, psi)
        return str(path)

    return _write
