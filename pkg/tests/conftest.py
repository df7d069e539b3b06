# Shared fixtures for the test suite: seeded generators, small scenes and toy graphs,
# plus a central finite-difference helper used by the gradient tests.

import os

import numpy as np
import pytest

from core.activity_logger import ActivityLogger
from core.synthetic import generate_synthetic
from models.config import SyntheticSceneSpec
from models.cube import ReducedCube


@pytest.fixture(autouse=True)
def reset_activity():
    activity = ActivityLogger()
    activity.detach()
    activity.clear_logs()
    yield
    activity.detach()
    activity.clear_logs()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_scene():
    spec = SyntheticSceneSpec(height=24, width=24, bands=6, classes=3, regions=9, separation=1.0, noise_std=0.05)
    return generate_synthetic(spec, seed=0)


@pytest.fixture
def planted_graph():
    """Two 4-cliques joined by one weak edge; nodes 0-3 and 4-7."""
    A = np.zeros((8, 8))
    for block in (range(0, 4), range(4, 8)):
        for i in block:
            for j in block:
                if i != j:
                    A[i, j] = 1.0
    A[3, 4] = A[4, 3] = 0.1
    return A


def reduced_from(values):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        values = values[:, :, None]
    return ReducedCube(values)


def numeric_gradient(f, value, eps=1e-6):
    """Central differences of a scalar function of one array."""
    value = np.array(value, dtype=np.float64)
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + eps
        upper = f(value)
        value[index] = original - eps
        lower = f(value)
        value[index] = original
        grad[index] = (upper - lower) / (2 * eps)
    return grad


def assert_gradients_close(analytic, numeric, tol=1e-4, floor=1e-4):
    """Relative error below tol in every entry; entries under `floor` in magnitude are compared against floor."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    error = np.abs(analytic - numeric) / scale
    worst = np.unravel_index(np.argmax(error), error.shape)
    assert error[worst] <= tol, f"entry {worst}: analytic {analytic[worst]!r}, numeric {numeric[worst]!r}"


def data_dir():
    return os.environ.get("MOBGCN_DATA_DIR")
