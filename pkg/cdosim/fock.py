"""
States, density matrices and generic linear algebra on truncated Fock spaces.

Every value here is immutable once built: amplitude arrays are copied and
flagged read-only in ``__post_init__``, and every operation returns a fresh
object. Nothing auto-renormalizes (``mzi.postselect`` is the one exception),
so unitarity defects further down the pipeline stay visible.

Tensor layout
-------------
``TwoModeState.amplitudes[n_a, n_b]`` and
``ThreeSystemState.amplitudes[n_a, n_b, n_c]``. A two-mode operator on
``(a, b)`` indexes its rows / columns as ``n_a * dim_b + n_b`` (the
``numpy.kron`` convention), which is exactly the row-major flattening of the
leading two axes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    TYPE_CHECKING,
    List,
    NewType,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from scipy.special import gammaln

from cdosim.errors import (
    DimensionMismatchError,
    InvalidSubspaceError,
    NotNormalizedError,
    OutOfRangeError,
    TruncationRiskError,
)

if TYPE_CHECKING:
    from cdosim.elements import OperatorMatrix


logger = logging.getLogger("cdosim.fock")


FockDim = NewType("FockDim", int)

DEFAULT_DIM_A = 32
# The MZI ancillas never carry more than one photon.
DEFAULT_DIM_ANCILLA = 2

# Probability allowed in the top decile of levels for a "physical" state.
TAIL_GUARD = 1e-8
# Displacements must satisfy |alpha|^2 <= GUARD_FACTOR * dim.
GUARD_FACTOR = 0.25
NORM_TOL = 1e-10
# Amplitude tolerated outside the dual-rail subspace.
SUBSPACE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Dimension and truncation guards
# ---------------------------------------------------------------------------


def fock_dim(d: int) -> FockDim:
    """Validate a truncation dimension (number of retained levels)."""
    if isinstance(d, bool) or int(d) != d:
        raise ValueError(f"Fock dimension must be an integer, got {d!r}")
    if d < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {d}")
    return FockDim(int(d))


def check_displacement_guard(amplitude: complex, d: int, what: str = "alpha") -> None:
    """Raise ``TruncationRiskError`` if ``|amplitude|^2 > 0.25 * d``."""
    size = abs(amplitude) ** 2
    limit = GUARD_FACTOR * d
    # Relative slack so that e.g. |sqrt(8)|^2 does not trip the guard at d=32.
    if size > limit * (1.0 + 1e-12):
        raise TruncationRiskError(
            f"|{what}|^2 = {size:.6g} exceeds {GUARD_FACTOR}*dim = {limit:.6g} "
            f"(dim={d})"
        )


def required_dim(*amplitudes: complex, minimum: int = DEFAULT_DIM_A) -> FockDim:
    """Smallest dimension >= ``minimum`` that passes the displacement guard
    for every amplitude given."""
    largest = max((abs(x) ** 2 for x in amplitudes), default=0.0)
    needed = math.ceil(largest / GUARD_FACTOR - 1e-9)
    return fock_dim(max(minimum, needed, 2))


def tail_mass(probabilities: np.ndarray) -> float:
    """Probability held by the top decile of Fock levels (at least one level)."""
    probs = np.asarray(probabilities, dtype=float)
    k = max(1, math.ceil(probs.shape[0] / 10))
    return float(probs[-k:].sum())


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d amplitude array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# State types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeState:
    """Pure state of one truncated mode: ``amplitudes[n] = <n|psi>``."""

    amplitudes: np.ndarray

    modes = ("a",)

    def __post_init__(self):
        amps = _frozen(self.amplitudes, 1)
        fock_dim(amps.shape[0])
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> FockDim:
        return FockDim(self.amplitudes.shape[0])

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def tail_mass(self) -> float:
        return tail_mass(self.probabilities)

    def is_physical(self, guard: float = TAIL_GUARD) -> bool:
        return self.tail_mass < guard

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm**2 - 1.0) <= tol

    def require_normalized(self, what: str = "state") -> None:
        if not self.is_normalized():
            raise NotNormalizedError(
                f"{what} has squared norm {self.norm**2:.12g}, expected 1"
            )

    def normalize(self) -> "ModeState":
        n = self.norm
        if n == 0.0:
            raise NotNormalizedError("cannot normalize the zero vector")
        return ModeState(self.amplitudes / n)

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.dim), self.probabilities) / self.norm**2)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state of one truncated mode.

    ``pure_state`` is kept when the matrix came from ``density_from_pure`` so
    interferometer runs can skip the eigendecomposition.
    """

    elements: np.ndarray
    pure_state: Optional[ModeState] = field(default=None, repr=False)

    def __post_init__(self):
        m = _frozen(self.elements, 2)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got {m.shape}")
        fock_dim(m.shape[0])
        object.__setattr__(self, "elements", m)

    @property
    def dim(self) -> FockDim:
        return FockDim(self.elements.shape[0])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def validate(self, tol: float = NORM_TOL, eig_tol: float = 1e-8) -> "DensityMatrix":
        """Check Hermiticity, unit trace and positivity; return ``self``."""
        if self.hermiticity_defect() > tol:
            raise ValueError(
                f"density matrix is not Hermitian (defect {self.hermiticity_defect():.3g})"
            )
        if abs(self.trace - 1.0) > tol:
            raise NotNormalizedError(f"density matrix has trace {self.trace:.12g}")
        lowest = float(np.linalg.eigvalsh(self.elements).min())
        if lowest < -eig_tol:
            raise ValueError(f"density matrix has eigenvalue {lowest:.3g} < 0")
        return self

    @cached_property
    def spectral_components(self) -> Tuple[Tuple[float, ModeState], ...]:
        """``(weight, state)`` pairs with ``rho = sum w |k><k|``.

        Eigenvalues below 1e-14 are dropped.
        """
        if self.pure_state is not None:
            return ((1.0, self.pure_state),)
        weights, vectors = np.linalg.eigh(self.elements)
        return tuple(
            (float(w), ModeState(vectors[:, i]))
            for i, w in enumerate(weights)
            if w > 1e-14
        )


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Joint pure state of modes ``a`` and ``b``."""

    amplitudes: np.ndarray

    modes = ("a", "b")

    def __post_init__(self):
        amps = _frozen(self.amplitudes, 2)
        fock_dim(amps.shape[0])
        fock_dim(amps.shape[1])
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim_a(self) -> FockDim:
        return FockDim(self.amplitudes.shape[0])

    @property
    def dim_b(self) -> FockDim:
        return FockDim(self.amplitudes.shape[1])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# Dual-rail basis patterns (n_b, n_c).
DUAL_RAIL_01 = (0, 1)
DUAL_RAIL_10 = (1, 0)


@dataclass(frozen=True, eq=False)
class ThreeSystemState:
    """Mode ``a`` entangled with the dual-rail qubit carried by modes ``b``, ``c``.

    The full ``(dim_a, dim_b, dim_c)`` tensor is stored. Only the blocks
    ``[:, 0, 1]`` (``|0>_b|1>_c``) and ``[:, 1, 0]`` (``|1>_b|0>_c``) may hold
    amplitude; ``dual_rail_blocks`` enforces that.
    """

    amplitudes: np.ndarray

    modes = ("a", "b", "c")

    def __post_init__(self):
        amps = _frozen(self.amplitudes, 3)
        for d in amps.shape:
            fock_dim(d)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_blocks(
        cls,
        block_01: np.ndarray,
        block_10: np.ndarray,
        dim_b: int = DEFAULT_DIM_ANCILLA,
        dim_c: int = DEFAULT_DIM_ANCILLA,
    ) -> "ThreeSystemState":
        block_01 = np.asarray(block_01)
        amps = np.zeros((block_01.shape[0], dim_b, dim_c), dtype=np.complex128)
        amps[:, 0, 1] = block_01
        amps[:, 1, 0] = block_10
        return cls(amps)

    @property
    def dim_a(self) -> FockDim:
        return FockDim(self.amplitudes.shape[0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def leakage(self) -> float:
        """Norm of the amplitude outside the dual-rail subspace."""
        mask = np.ones(self.amplitudes.shape[1:], dtype=bool)
        mask[DUAL_RAIL_01] = False
        mask[DUAL_RAIL_10] = False
        return float(np.linalg.norm(self.amplitudes[:, mask]))

    def dual_rail_blocks(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return the ``(|0>_b|1>_c, |1>_b|0>_c)`` mode-a blocks."""
        leak = self.leakage()
        if leak > SUBSPACE_TOL:
            raise InvalidSubspaceError(
                f"{leak:.3g} of amplitude lies outside the dual-rail subspace"
            )
        return self.amplitudes[:, 0, 1], self.amplitudes[:, 1, 0]


JointState = Union[ModeState, TwoModeState, ThreeSystemState]


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def fock_state(n: int, d: int) -> ModeState:
    d = fock_dim(d)
    if not 0 <= n < d:
        raise OutOfRangeError(f"level {n} outside the truncated basis 0..{d - 1}")
    amps = np.zeros(d, dtype=np.complex128)
    amps[n] = 1.0
    return ModeState(amps)


def coherent_amplitudes(alpha: complex, d: int) -> np.ndarray:
    """Closed-form ``alpha^n exp(-|alpha|^2/2) / sqrt(n!)``, not renormalized."""
    n = np.arange(d)
    if alpha == 0:
        amps = np.zeros(d, dtype=np.complex128)
        amps[0] = 1.0
        return amps
    log_mag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, d: int) -> ModeState:
    """Coherent state renormalized on the truncated space.

    The tail-mass report is ``state.tail_mass`` / ``state.is_physical()``;
    a warning is logged when it exceeds ``TAIL_GUARD``.
    """
    d = fock_dim(d)
    check_displacement_guard(alpha, d)
    state = ModeState(coherent_amplitudes(complex(alpha), d)).normalize()
    if not state.is_physical():
        logger.warning(
            "coherent state alpha=%s at dim %d has tail mass %.3g",
            alpha,
            d,
            state.tail_mass,
        )
    return state


def cat_state(alpha0: complex, sign: int, d: int) -> ModeState:
    """Analytic ``(|alpha0> + sign |-alpha0>)`` normalized on the truncated space."""
    d = fock_dim(d)
    check_displacement_guard(alpha0, d, what="alpha0")
    plus = coherent_amplitudes(complex(alpha0), d)
    minus = coherent_amplitudes(-complex(alpha0), d)
    return ModeState(plus + sign * minus).normalize()


def switch_state(beta: complex, sign: int, d: int) -> ModeState:
    """``|0> + sign |beta>``, normalized."""
    d = fock_dim(d)
    check_displacement_guard(beta, d, what="beta")
    return ModeState(
        coherent_amplitudes(0.0, d) + sign * coherent_amplitudes(complex(beta), d)
    ).normalize()


def from_amplitudes(values: Sequence[complex], d: Optional[int] = None) -> ModeState:
    """Zero-pad (or check) a raw amplitude list to ``d`` levels and normalize."""
    values = np.asarray(values, dtype=np.complex128)
    d = fock_dim(d if d is not None else max(2, values.shape[0]))
    if values.shape[0] > d:
        extra = float(np.linalg.norm(values[d:]))
        if extra > 0:
            raise OutOfRangeError(
                f"{values.shape[0]} amplitudes do not fit in dim {d} "
                f"(discarded norm {extra:.3g})"
            )
        values = values[:d]
    amps = np.zeros(d, dtype=np.complex128)
    amps[: values.shape[0]] = values
    return ModeState(amps).normalize()


# ---------------------------------------------------------------------------
# Products, overlaps and projections
# ---------------------------------------------------------------------------


def _same_dim(x: ModeState, y: ModeState) -> None:
    if x.dim != y.dim:
        raise DimensionMismatchError(f"dimension mismatch: {x.dim} vs {y.dim}")


def inner_product(x: ModeState, y: ModeState) -> complex:
    """``<x|y>``, conjugate-linear in ``x``."""
    _same_dim(x, y)
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def fidelity(x: ModeState, y: ModeState) -> float:
    _same_dim(x, y)
    x.require_normalized("first state")
    y.require_normalized("second state")
    return float(min(1.0, abs(inner_product(x, y)) ** 2))


def tensor(a: ModeState, b: ModeState) -> TwoModeState:
    return TwoModeState(np.outer(a.amplitudes, b.amplitudes))


def project_mode(s: TwoModeState, mode: str, n: int) -> ModeState:
    """Amplitudes of the other mode after projecting ``mode`` onto ``|n>``.

    The result is not renormalized.
    """
    if mode == "a":
        if not 0 <= n < s.dim_a:
            raise OutOfRangeError(f"level {n} outside 0..{s.dim_a - 1}")
        return ModeState(s.amplitudes[n, :])
    if mode == "b":
        if not 0 <= n < s.dim_b:
            raise OutOfRangeError(f"level {n} outside 0..{s.dim_b - 1}")
        return ModeState(s.amplitudes[:, n])
    raise ValueError(f"unknown mode {mode!r}")


def reduced_density(s: TwoModeState, keep: str = "a") -> DensityMatrix:
    """Partial trace over the mode not in ``keep``."""
    psi = s.amplitudes if keep == "a" else s.amplitudes.T
    return DensityMatrix(psi @ psi.conj().T)


def joint_fidelity(x: JointState, y: JointState) -> float:
    """``|<x|y>|^2`` for two joint states of the same shape."""
    if x.amplitudes.shape != y.amplitudes.shape:
        raise DimensionMismatchError(
            f"shape mismatch: {x.amplitudes.shape} vs {y.amplitudes.shape}"
        )
    return float(abs(np.vdot(x.amplitudes, y.amplitudes)) ** 2)


def apply_to_mode(
    op: "OperatorMatrix",
    target: Union[str, Sequence[str]],
    s: JointState,
) -> JointState:
    """Apply ``op`` to the mode(s) named by ``target``, identity elsewhere.

    ``target`` is a mode name (``"a"``, ``"b"``, ``"c"``) or a sequence of
    names for a multi-mode operator, ordered as the operator's ``dims``.
    """
    targets: List[str] = [target] if isinstance(target, str) else list(target)
    try:
        axes = [s.modes.index(t) for t in targets]
    except ValueError:
        raise ValueError(f"{type(s).__name__} has no mode among {targets}") from None

    dims = tuple(s.amplitudes.shape[ax] for ax in axes)
    if tuple(op.dims) != dims:
        raise DimensionMismatchError(
            f"operator dims {tuple(op.dims)} do not match target dims {dims}"
        )

    leading = list(range(len(axes)))
    psi = np.moveaxis(s.amplitudes, axes, leading)
    flat = psi.reshape(int(np.prod(dims)), -1)
    if op.diagonal:
        out = np.diagonal(op.elements)[:, None] * flat
    else:
        out = op.elements @ flat
    out = np.moveaxis(out.reshape(psi.shape), leading, axes)
    return type(s)(out)


# ---------------------------------------------------------------------------
# Density-matrix operations
# ---------------------------------------------------------------------------


def density_from_pure(s: ModeState) -> DensityMatrix:
    return DensityMatrix(np.outer(s.amplitudes, s.amplitudes.conj()), pure_state=s)


def mixture(components: Sequence[Tuple[float, ModeState]]) -> DensityMatrix:
    """``sum w |s><s|`` over ``(w, s)`` pairs; weights are not renormalized."""
    first = components[0][1]
    rho = np.zeros((first.dim, first.dim), dtype=np.complex128)
    for weight, state in components:
        _same_dim(first, state)
        rho += weight * np.outer(state.amplitudes, state.amplitudes.conj())
    return DensityMatrix(rho)


def _check_square(rho: DensityMatrix, op: "OperatorMatrix") -> None:
    if len(op.dims) != 1 or op.dims[0] != rho.dim:
        raise DimensionMismatchError(
            f"operator dims {tuple(op.dims)} do not match density dim {rho.dim}"
        )


def evolve(rho: DensityMatrix, u: "OperatorMatrix") -> DensityMatrix:
    """``U rho U^dagger``."""
    _check_square(rho, u)
    m = u.elements
    out = m @ rho.elements @ m.conj().T
    pure = None
    if rho.pure_state is not None:
        pure = ModeState(m @ rho.pure_state.amplitudes)
    return DensityMatrix(out, pure_state=pure)


def expectation(rho: DensityMatrix, op: "OperatorMatrix") -> complex:
    """``Tr(rho op)``."""
    _check_square(rho, op)
    return complex(np.trace(rho.elements @ op.elements))
