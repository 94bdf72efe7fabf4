"""Shared fixtures: warmed kernels, low-detail machine catalog, RNG helpers."""

import numpy as np
import pytest

from rtroom import transforms as tr
from rtroom.kernels import warmup
from rtroom.machine import Scene, builtin_machines, builtin_phantom, default_patient_offset
from rtroom.scenario import MachineCatalog

TEST_DETAIL = 0.15

# Pass/fail lines collected by the acceptance tests; echoed after the run so
# they survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so individual tests stay fast."""
    warmup()


@pytest.fixture(scope="session")
def catalog():
    return MachineCatalog()


@pytest.fixture(scope="session")
def atlas(catalog):
    """Low-detail atlas-100 description shared across tests."""
    return catalog.machine("atlas-100", detail=TEST_DETAIL)


@pytest.fixture(scope="session")
def atlas_scene(atlas):
    phantom = builtin_phantom(detail=TEST_DETAIL)
    return Scene(atlas, patient=phantom, patient_offset=default_patient_offset())


def random_rigid(rng, translation_mm=500.0):
    """Uniformly random rigid transform for invariance tests."""
    t = tr.translate(*rng.uniform(-translation_mm, translation_mm, 3))
    r = tr.compose(tr.rot_z(rng.uniform(0.0, 360.0)),
                   tr.compose(tr.rot_y(rng.uniform(0.0, 360.0)),
                              tr.rot_x(rng.uniform(0.0, 360.0))))
    return tr.compose(t, r)


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
