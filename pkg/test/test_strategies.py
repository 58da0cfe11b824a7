"""
Meta-tests for ``test/strategies.py``.

These don't exercise the simulator itself - they just confirm the Hypothesis
strategies produce well-formed values so the property tests can rely on them.
"""

import numpy as np
from hypothesis import given, settings

from cdosim.fock import GUARD_FACTOR
from test import strategies


@given(strategies.mode_states(dim=16))
@settings(max_examples=25, deadline=None)
def test_mode_states_are_normalized_low_support(state):
    assert state.dim == 16
    assert state.is_normalized()
    assert np.all(state.amplitudes[4:] == 0)


@given(strategies.two_mode_states(dim_a=12, dim_b=3))
@settings(max_examples=25, deadline=None)
def test_two_mode_states_shape_and_norm(state):
    assert state.amplitudes.shape == (12, 3)
    assert abs(state.norm - 1.0) < 1e-12


@given(strategies.density_matrices(dim=10))
@settings(max_examples=15, deadline=None)
def test_density_matrices_are_valid(rho):
    rho.validate()


@given(strategies.betas(max_abs=2.0))
@settings(max_examples=50, deadline=None)
def test_betas_respect_the_guard_at_default_dim(beta):
    assert abs(beta) <= 2.0 + 1e-12
    assert abs(beta) ** 2 <= GUARD_FACTOR * 32
