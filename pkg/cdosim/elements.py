"""
Unitary building blocks: ladder operators, displacement, Kerr cross-phase,
the dual-rail 50/50 beam splitter and phase shifter, plus the finite-ancilla
beam-splitter model of a displacement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.linalg

from cdosim.errors import DimensionMismatchError
from cdosim.fock import (
    DUAL_RAIL_01,
    DUAL_RAIL_10,
    DEFAULT_DIM_A,
    TAIL_GUARD,
    ModeState,
    ThreeSystemState,
    TwoModeState,
    check_displacement_guard,
    coherent_amplitudes,
    coherent_state,
    fock_dim,
    reduced_density,
    required_dim,
    tail_mass,
)


logger = logging.getLogger("cdosim.elements")

UNITARY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Operator container
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator on one truncated mode (``dims=(d,)``) or a mode pair
    (``dims=(d_a, d_b)``, kron ordering).

    ``diagonal`` is an optimization hint for ``apply_to_mode`` only.
    """

    elements: np.ndarray
    dims: Tuple[int, ...]
    unitary: bool = False
    diagonal: bool = False

    def __post_init__(self):
        m = np.array(self.elements, dtype=np.complex128, copy=True)
        dims = tuple(int(fock_dim(d)) for d in self.dims)
        size = int(np.prod(dims))
        if m.shape != (size, size):
            raise DimensionMismatchError(
                f"operator shape {m.shape} does not match dims {dims}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "elements", m)
        object.__setattr__(self, "dims", dims)
        if self.unitary and self.unitarity_defect() >= UNITARY_TOL:
            raise ValueError(
                f"operator flagged unitary has defect {self.unitarity_defect():.3g}"
            )

    def unitarity_defect(self) -> float:
        """``max |U^dagger U - I|``."""
        m = self.elements
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(
            self.elements.conj().T, self.dims, self.unitary, self.diagonal
        )

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.dims != other.dims:
            raise DimensionMismatchError(f"cannot compose {self.dims} with {other.dims}")
        return OperatorMatrix(
            self.elements @ other.elements,
            self.dims,
            self.unitary and other.unitary,
            self.diagonal and other.diagonal,
        )

    def apply(self, state: ModeState) -> ModeState:
        if self.dims != (state.dim,):
            raise DimensionMismatchError(
                f"operator dims {self.dims} do not match state dim {state.dim}"
            )
        return ModeState(self.elements @ state.amplitudes)


@dataclass(frozen=True)
class KerrParams:
    """Cross-phase per photon pair, ``theta = K l / v`` (radians)."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta) or abs(self.theta) > math.pi:
            raise ValueError(f"Kerr phase must be finite with |theta| <= pi, got {self.theta}")


@dataclass(frozen=True)
class BsDisplacementParams:
    """Ancilla coherent amplitude ``gamma`` and reflectance ``R`` of the
    beam splitter that emulates ``D(R gamma)``."""

    gamma: complex
    reflectance: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))
        if not 0.0 < self.reflectance < 1.0:
            raise ValueError(f"reflectance must lie in (0, 1), got {self.reflectance}")

    @property
    def alpha(self) -> complex:
        return self.reflectance * self.gamma


# ---------------------------------------------------------------------------
# Ladder operators and displacement
# ---------------------------------------------------------------------------


def lowering_matrix(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(np.complex128)


def annihilation(d: int) -> OperatorMatrix:
    d = fock_dim(d)
    return OperatorMatrix(lowering_matrix(d), (d,))


def creation(d: int) -> OperatorMatrix:
    d = fock_dim(d)
    return OperatorMatrix(lowering_matrix(d).T, (d,))


def number(d: int) -> OperatorMatrix:
    d = fock_dim(d)
    return OperatorMatrix(np.diag(np.arange(d, dtype=float)), (d,), diagonal=True)


def parity(d: int) -> OperatorMatrix:
    d = fock_dim(d)
    signs = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    return OperatorMatrix(np.diag(signs), (d,), unitary=True, diagonal=True)


def displacement(alpha: complex, d: int) -> OperatorMatrix:
    """``expm(alpha a^dagger - alpha^* a)`` on the truncated space."""
    d = fock_dim(d)
    check_displacement_guard(alpha, d)
    a = lowering_matrix(d)
    generator = alpha * a.T - np.conj(alpha) * a
    return OperatorMatrix(scipy.linalg.expm(generator), (d,), unitary=True)


class DisplacementKernel:
    """Displacements at one dimension from a single eigendecomposition.

    With ``alpha = r exp(i phi)`` the truncated generator factors as
    ``R(phi) r (a^dagger - a) R(phi)^dagger`` where ``R(phi) = exp(i phi n)``,
    and ``i (a^dagger - a)`` is Hermitian. Diagonalizing it once gives the
    same matrix exponential as ``displacement`` for every ``alpha`` at
    O(d^2) per state.
    """

    def __init__(self, d: int):
        self.dim = fock_dim(d)
        a = lowering_matrix(self.dim)
        self._energies, self._vectors = np.linalg.eigh(1j * (a.T - a))
        self._levels = np.arange(self.dim)

    def _split(self, alpha: complex) -> Tuple[np.ndarray, np.ndarray]:
        r, phi = abs(alpha), float(np.angle(alpha))
        rotation = np.exp(1j * phi * self._levels)
        evolution = np.exp(-1j * r * self._energies)
        return rotation, evolution

    def apply(self, alpha: complex, vectors: np.ndarray) -> np.ndarray:
        """``D(alpha) @ vectors`` for a vector or a ``(d, k)`` column stack."""
        rotation, evolution = self._split(alpha)
        v = np.asarray(vectors, dtype=np.complex128)
        cols = v.reshape(self.dim, -1)
        w = rotation.conj()[:, None] * cols
        w = self._vectors.conj().T @ w
        w = evolution[:, None] * w
        w = self._vectors @ w
        w = rotation[:, None] * w
        return w.reshape(v.shape)

    def matrix(self, alpha: complex) -> np.ndarray:
        rotation, evolution = self._split(alpha)
        core = (self._vectors * evolution) @ self._vectors.conj().T
        return rotation[:, None] * core * rotation.conj()[None, :]


@lru_cache(maxsize=32)
def displacement_kernel(d: int) -> DisplacementKernel:
    return DisplacementKernel(d)


def displace(alpha: complex, amplitudes: np.ndarray, guard: bool = True) -> np.ndarray:
    """Apply ``D(alpha)`` along axis 0 of ``amplitudes``."""
    amplitudes = np.asarray(amplitudes)
    d = amplitudes.shape[0]
    if guard:
        check_displacement_guard(alpha, d)
    if alpha == 0:
        return np.array(amplitudes, dtype=np.complex128)
    return displacement_kernel(d).apply(alpha, amplitudes)


# ---------------------------------------------------------------------------
# Kerr cross-phase
# ---------------------------------------------------------------------------


def kerr_unitary(p: KerrParams, d_a: int, d_b: int) -> OperatorMatrix:
    """``exp(-i theta n_a n_b)`` on ``(a, b)``."""
    d_a, d_b = fock_dim(d_a), fock_dim(d_b)
    phases = np.exp(-1j * p.theta * np.outer(np.arange(d_a), np.arange(d_b)))
    return OperatorMatrix(np.diag(phases.ravel()), (d_a, d_b), unitary=True, diagonal=True)


# ---------------------------------------------------------------------------
# Dual-rail elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DualRailOperator:
    """2x2 action on the ``(|0>_b|1>_c, |1>_b|0>_c)`` blocks of a
    ``ThreeSystemState``, identity on mode ``a``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.shape != (2, 2):
            raise ValueError(f"dual-rail operator must be 2x2, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, s: ThreeSystemState) -> ThreeSystemState:
        u, v = s.dual_rail_blocks()
        (m00, m01), (m10, m11) = self.matrix
        amps = np.zeros_like(s.amplitudes)
        amps[(slice(None),) + DUAL_RAIL_01] = m00 * u + m01 * v
        amps[(slice(None),) + DUAL_RAIL_10] = m10 * u + m11 * v
        return ThreeSystemState(amps)

    def __matmul__(self, other: "DualRailOperator") -> "DualRailOperator":
        return DualRailOperator(self.matrix @ other.matrix)


# |0>_b|1>_c -> (|0>_b|1>_c + i|1>_b|0>_c)/sqrt2, |1>_b|0>_c -> (|1>_b|0>_c + i|0>_b|1>_c)/sqrt2
BS5050 = DualRailOperator(np.array([[1.0, 1.0j], [1.0j, 1.0]]) / math.sqrt(2.0))


def bs5050_dualrail(s: ThreeSystemState) -> ThreeSystemState:
    return BS5050.apply(s)


def phase_shifter(eta: float) -> DualRailOperator:
    """Phase ``exp(i eta)`` on the ``|0>_b|1>_c`` block (the PS arm)."""
    return DualRailOperator(np.diag([np.exp(1j * eta), 1.0]))


# ---------------------------------------------------------------------------
# Finite-ancilla beam-splitter model of a displacement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BsValidationReport:
    fidelity: float
    alpha: complex
    coupling_angle: float
    dim_a: int
    dim_ancilla: int
    ancilla_tail_mass: float


def beam_splitter_apply(angle: float, joint: np.ndarray) -> np.ndarray:
    """Apply ``exp(angle (a^dagger b - a b^dagger))`` to ``joint[n_a, n_b]``.

    The generator conserves ``n_a + n_b``, so it is exponentiated one
    total-photon-number block at a time.
    """
    d_a, d_b = joint.shape
    out = np.array(joint, dtype=np.complex128, copy=True)
    for total in range(d_a + d_b - 1):
        lo, hi = max(0, total - d_b + 1), min(total, d_a - 1)
        if hi <= lo:
            continue
        n_a = np.arange(lo, hi + 1)
        n_b = total - n_a
        size = n_a.shape[0]
        gen = np.zeros((size, size))
        # a^dagger b: |n_a, n_b> -> sqrt(n_a+1) sqrt(n_b) |n_a+1, n_b-1>
        coupling = angle * np.sqrt(n_a[:-1] + 1.0) * np.sqrt(n_b[:-1])
        gen[np.arange(1, size), np.arange(size - 1)] = coupling
        gen[np.arange(size - 1), np.arange(1, size)] = -coupling
        out[n_a, n_b] = scipy.linalg.expm(gen) @ joint[n_a, n_b]
    return out


def ancilla_dim(gamma: complex) -> int:
    """Smallest dimension >= 32 that passes the guard for ``gamma`` and leaves
    less than ``TAIL_GUARD`` of ``|gamma>`` in the top decile."""
    d = required_dim(gamma, minimum=DEFAULT_DIM_A)
    while True:
        probs = np.abs(coherent_amplitudes(complex(gamma), d)) ** 2
        if tail_mass(probs / probs.sum()) < TAIL_GUARD:
            return int(d)
        d += max(1, d // 4)


def bs_displacement_validation(
    p: BsDisplacementParams,
    state: ModeState,
    dim_ancilla: int = 0,
) -> BsValidationReport:
    """Fidelity between the physical beam-splitter output and ``D(R gamma)|state>``.

    ``R`` is the amplitude reflection coefficient, so the coupling angle is
    ``asin(R)`` and the ancilla's reflected amplitude is exactly ``R gamma``.
    The ancilla (second port, fed by ``|gamma>``) is traced out.
    """
    d_anc = dim_ancilla or ancilla_dim(p.gamma)
    check_displacement_guard(p.gamma, d_anc, what="gamma")
    check_displacement_guard(p.alpha, state.dim)

    angle = math.asin(p.reflectance)
    ancilla = coherent_state(p.gamma, d_anc)
    joint = beam_splitter_apply(angle, np.outer(state.amplitudes, ancilla.amplitudes))
    rho_a = reduced_density(TwoModeState(joint), keep="a").elements

    target = displace(p.alpha, state.amplitudes)
    fid = float(np.real(np.vdot(target, rho_a @ target)))
    logger.debug(
        "beam-splitter displacement R=%g gamma=%s: fidelity %.12f",
        p.reflectance,
        p.gamma,
        fid,
    )
    return BsValidationReport(
        fidelity=fid,
        alpha=p.alpha,
        coupling_angle=angle,
        dim_a=state.dim,
        dim_ancilla=d_anc,
        ancilla_tail_mass=ancilla.tail_mass,
    )
