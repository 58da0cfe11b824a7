"""
Shared pytest fixtures for the cdosim tests.

``cdosim.pytest_pins`` provides the ``pinned`` fixture used for regression
values that come out of a simulation instead of a closed form.

The ``reset_state`` autouse fixture drops the per-dimension displacement
kernels after every test so no test depends on another having warmed the
cache.
"""

from __future__ import annotations

import numpy as np
import pytest

from cdosim.elements import displacement_kernel
from cdosim.fock import ModeState, TwoModeState, fock_state, tensor

pytest_plugins = ["cdosim.pytest_pins"]


@pytest.fixture(autouse=True)
def reset_state():
    yield
    displacement_kernel.cache_clear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture
def probe() -> TwoModeState:
    """``|1>_a (|0>_b + |1>_b) / sqrt 2`` at ``dim_a = 32``."""
    return tensor(fock_state(1, 32), ModeState(np.array([1.0, 1.0])).normalize())


def random_state(rng: np.random.Generator, dim: int, support: int = 4) -> ModeState:
    amps = np.zeros(dim, dtype=np.complex128)
    amps[:support] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return ModeState(amps).normalize()
