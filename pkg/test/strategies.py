"""
Hypothesis strategies for the cdosim property tests.

States are drawn with support on the lowest few Fock levels so that every
displacement the tests apply stays well inside the truncation guard. That
keeps failures pointing at the code under test rather than at truncation
error.
"""

from __future__ import annotations

import math

import hypothesis.strategies as st
import numpy as np

from cdosim.fock import DensityMatrix, ModeState, TwoModeState, mixture


_unit = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def complex_numbers(draw, max_abs: float = 1.0) -> complex:
    """Complex number with ``|z| <= max_abs``, uniform in radius and angle."""
    r = draw(st.floats(min_value=0.0, max_value=max_abs, allow_nan=False))
    phi = draw(st.floats(min_value=0.0, max_value=2 * math.pi, allow_nan=False))
    return complex(r * math.cos(phi), r * math.sin(phi))


@st.composite
def amplitude_vectors(draw, support: int) -> np.ndarray:
    """Nonzero complex vector of length ``support``."""
    re = draw(st.lists(_unit, min_size=support, max_size=support))
    im = draw(st.lists(_unit, min_size=support, max_size=support))
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        v[0] += 1.0
    return v


@st.composite
def mode_states(draw, dim: int = 32, max_support: int = 4) -> ModeState:
    """Normalized state of ``dim`` levels living on ``|0>..|max_support-1>``."""
    support = draw(st.integers(min_value=1, max_value=max_support))
    amps = np.zeros(dim, dtype=np.complex128)
    amps[:support] = draw(amplitude_vectors(support))
    return ModeState(amps).normalize()


@st.composite
def two_mode_states(draw, dim_a: int = 32, dim_b: int = 2, max_support: int = 3) -> TwoModeState:
    """Normalized (a, b) state, possibly entangled, with low-level support on a."""
    support = min(max_support, dim_a)
    block = np.zeros((dim_a, dim_b), dtype=np.complex128)
    for n_b in range(dim_b):
        block[:support, n_b] = draw(amplitude_vectors(support))
    return TwoModeState(block / np.linalg.norm(block))


@st.composite
def density_matrices(draw, dim: int = 32, max_components: int = 3) -> DensityMatrix:
    """Mixture of up to ``max_components`` low-support pure states, trace 1."""
    k = draw(st.integers(min_value=1, max_value=max_components))
    weights = np.array(
        draw(st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=k, max_size=k))
    )
    weights = weights / weights.sum()
    states = [draw(mode_states(dim)) for _ in range(k)]
    return mixture(list(zip(weights, states)))


def betas(max_abs: float = 2.0):
    """Conditional-displacement amplitudes used throughout the suite."""
    return complex_numbers(max_abs=max_abs)


xi_settings = st.sampled_from([0.0, math.pi / 2, 1.3])
