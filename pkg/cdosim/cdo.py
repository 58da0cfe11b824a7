"""
The conditional displacement operator built from a Kerr cross-phase medium
sandwiched between two displacements.

Two evolutions are compared:

* ``exact_cdo`` -- the conjugated Kerr evolution
  ``D_a(alpha)^dagger exp(-i theta n_a n_b) D_a(alpha)``.
* ``ideal_cdo`` -- its large-alpha limit at fixed ``beta = -i theta alpha``:
  on the block with ``n_b`` photons in mode b, mode a picks up the phase
  ``exp(-i theta |alpha|^2 n_b)`` and the displacement ``D_a(n_b beta)``.

The exact evolution is available two ways. ``"conjugate"`` applies the three
factors literally and therefore needs ``|alpha|^2 <= dim_a / 4``. Expanding
the conjugation gives, per ``n_b`` block,

    exp(-i theta |alpha|^2 n_b) * exp(n_b (beta a^dagger - beta^* a - i theta a^dagger a))

which only involves ``beta`` and so stays simulable at the large ``alpha``
where the ideal limit is meant to hold. That is ``"normal_ordered"``;
``"auto"`` picks the literal path whenever its guard holds.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Tuple, TypeVar

import numpy as np
import scipy.linalg

from cdosim.elements import (
    KerrParams,
    OperatorMatrix,
    displace,
    displacement,
    displacement_kernel,
    kerr_unitary,
    lowering_matrix,
)
from cdosim.errors import TruncationRiskError
from cdosim.fock import (
    ThreeSystemState,
    TwoModeState,
    check_displacement_guard,
    fock_dim,
    joint_fidelity,
)


logger = logging.getLogger("cdosim.cdo")

# Realistic cross-phase shift per photon pair in current Kerr media.
DEFAULT_THETA = 0.01

ExactMethod = Literal["auto", "conjugate", "normal_ordered"]
CdoState = TypeVar("CdoState", TwoModeState, ThreeSystemState)


@dataclass(frozen=True)
class CdoParams:
    """Beam-splitter displacement ``alpha`` and Kerr phase ``theta``.

    ``beta`` and the accumulated phase ``theta |alpha|^2`` are always derived,
    never stored.
    """

    alpha: complex
    theta: float

    def __post_init__(self):
        alpha = complex(self.alpha)
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "theta", float(self.kerr.theta))

    @classmethod
    def from_beta(cls, beta: complex, theta: float) -> "CdoParams":
        """Parameters with ``-i theta alpha = beta``, i.e. ``alpha = i beta / theta``."""
        if theta == 0:
            raise ValueError("beta cannot be reached with theta = 0")
        return cls(alpha=1j * complex(beta) / theta, theta=theta)

    @property
    def kerr(self) -> KerrParams:
        return KerrParams(self.theta)

    @property
    def beta(self) -> complex:
        return -1j * self.theta * self.alpha

    @property
    def kerr_phase(self) -> float:
        """``theta |alpha|^2``, the phase per mode-b photon."""
        return self.theta * abs(self.alpha) ** 2


# ---------------------------------------------------------------------------
# Block-diagonal evolution over n_b
# ---------------------------------------------------------------------------


def _evolve_blocks(
    amplitudes: np.ndarray,
    block: Callable[[int, np.ndarray], np.ndarray],
) -> np.ndarray:
    """Apply ``block(n_b, psi)`` to every ``amplitudes[:, n_b, ...]`` slice.

    Both CDO forms commute with ``n_b``, so mode b (axis 1) only labels the
    blocks and any trailing axes ride along untouched.
    """
    out = np.empty(amplitudes.shape, dtype=np.complex128)
    for n_b in range(amplitudes.shape[1]):
        out[:, n_b] = block(n_b, amplitudes[:, n_b])
    return out


def _matmul_columns(m: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return (m @ psi.reshape(m.shape[0], -1)).reshape(psi.shape)


def resolve_method(p: CdoParams, dim_a: int, method: ExactMethod = "auto") -> str:
    if method not in ("auto", "conjugate", "normal_ordered"):
        raise ValueError(f"unknown exact CDO method {method!r}")
    if method != "auto":
        return method
    try:
        check_displacement_guard(p.alpha, dim_a)
    except TruncationRiskError:
        return "normal_ordered"
    return "conjugate"


def _normal_ordered_generator(p: CdoParams, dim_a: int) -> np.ndarray:
    a = lowering_matrix(dim_a)
    n_a = np.diag(np.arange(dim_a, dtype=float))
    return p.beta * a.T - np.conj(p.beta) * a - 1j * p.theta * n_a


def exact_cdo(p: CdoParams, s: CdoState, method: ExactMethod = "auto") -> CdoState:
    """``D_a(alpha)^dagger U_K D_a(alpha)`` applied to the (a, b) factor of ``s``."""
    dim_a, dim_b = s.amplitudes.shape[0], s.amplitudes.shape[1]
    chosen = resolve_method(p, dim_a, method)

    if chosen == "conjugate":
        check_displacement_guard(p.alpha, dim_a)
        kernel = displacement_kernel(dim_a)
        levels = np.arange(dim_a)

        def block(n_b: int, psi: np.ndarray) -> np.ndarray:
            if n_b == 0 or p.theta == 0:
                return psi
            shape = (dim_a,) + (1,) * (psi.ndim - 1)
            kerr = np.exp(-1j * p.theta * levels * n_b).reshape(shape)
            return kernel.apply(-p.alpha, kerr * kernel.apply(p.alpha, psi))

    else:
        check_displacement_guard((dim_b - 1) * p.beta, dim_a, what="n_b*beta")
        generator = _normal_ordered_generator(p, dim_a)

        def block(n_b: int, psi: np.ndarray) -> np.ndarray:
            if n_b == 0:
                return psi
            u = scipy.linalg.expm(n_b * generator)
            return np.exp(-1j * p.kerr_phase * n_b) * _matmul_columns(u, psi)

    logger.debug(
        "exact CDO (%s) alpha=%s theta=%g on %s", chosen, p.alpha, p.theta, s.amplitudes.shape
    )
    return type(s)(_evolve_blocks(s.amplitudes, block))


def ideal_cdo(beta: complex, kerr_phase: float, s: CdoState) -> CdoState:
    """``exp(-i kerr_phase n_b) exp(n_b (beta a^dagger - beta^* a))`` on ``s``."""
    dim_a, dim_b = s.amplitudes.shape[0], s.amplitudes.shape[1]
    check_displacement_guard((dim_b - 1) * beta, dim_a, what="n_b*beta")

    def block(n_b: int, psi: np.ndarray) -> np.ndarray:
        if n_b == 0:
            return psi
        return np.exp(-1j * kerr_phase * n_b) * displace(n_b * beta, psi, guard=False)

    return type(s)(_evolve_blocks(s.amplitudes, block))


def apply_cdo(
    p: CdoParams,
    s: CdoState,
    ideal: bool = True,
    method: ExactMethod = "auto",
) -> CdoState:
    if ideal:
        return ideal_cdo(p.beta, p.kerr_phase, s)
    return exact_cdo(p, s, method=method)


# ---------------------------------------------------------------------------
# Operator forms
# ---------------------------------------------------------------------------


def ideal_cdo_operator(
    beta: complex, kerr_phase: float, dim_a: int, dim_b: int
) -> OperatorMatrix:
    dim_a, dim_b = fock_dim(dim_a), fock_dim(dim_b)
    check_displacement_guard((dim_b - 1) * beta, dim_a, what="n_b*beta")
    kernel = displacement_kernel(dim_a)
    m = np.zeros((dim_a * dim_b, dim_a * dim_b), dtype=np.complex128)
    for n_b in range(dim_b):
        m[n_b::dim_b, n_b::dim_b] = np.exp(-1j * kerr_phase * n_b) * kernel.matrix(
            n_b * beta
        )
    return OperatorMatrix(m, (dim_a, dim_b), unitary=True)


def exact_cdo_operator(p: CdoParams, dim_a: int, dim_b: int) -> OperatorMatrix:
    """The literal composition ``(D^dagger x I) U_K (D x I)`` as one matrix."""
    d = displacement(p.alpha, dim_a)
    lifted = OperatorMatrix(
        np.kron(d.elements, np.eye(dim_b)), (dim_a, dim_b), unitary=True
    )
    return lifted.dagger() @ kerr_unitary(p.kerr, dim_a, dim_b) @ lifted


# ---------------------------------------------------------------------------
# Approximation quality
# ---------------------------------------------------------------------------


def cdo_infidelity(p: CdoParams, s: TwoModeState, method: ExactMethod = "auto") -> float:
    """``1 - |<exact|ideal>|^2`` for the two evolutions of ``s``."""
    exact = exact_cdo(p, s, method=method)
    ideal = ideal_cdo(p.beta, p.kerr_phase, s)
    return max(0.0, 1.0 - joint_fidelity(exact, ideal))


@dataclass(frozen=True)
class ScanRow:
    theta: float
    alpha: complex
    infidelity: float


@dataclass(frozen=True)
class ConvergenceScan:
    beta: complex
    rows: Tuple[ScanRow, ...]

    @property
    def infidelities(self) -> List[float]:
        return [row.infidelity for row in self.rows]

    @property
    def ratios(self) -> List[Optional[float]]:
        """``infid[k+1] / infid[k]``; ``None`` where the denominator vanishes."""
        out: List[Optional[float]] = []
        for prev, cur in zip(self.rows, self.rows[1:]):
            out.append(cur.infidelity / prev.infidelity if prev.infidelity > 0 else None)
        return out

    @property
    def orders(self) -> List[Optional[float]]:
        """Convergence order ``log(infid ratio) / log(theta ratio)`` per step."""
        out: List[Optional[float]] = []
        for prev, cur, ratio in zip(self.rows, self.rows[1:], self.ratios):
            if (
                ratio is None
                or ratio <= 0
                or prev.theta == cur.theta
                or prev.theta == 0
                or cur.theta == 0
            ):
                out.append(None)
                continue
            out.append(math.log(ratio) / math.log(abs(cur.theta / prev.theta)))
        return out

    @property
    def monotone(self) -> bool:
        """Infidelity never increases along the scan."""
        return all(
            cur.infidelity <= prev.infidelity + 1e-15
            for prev, cur in zip(self.rows, self.rows[1:])
        )

    @property
    def strictly_decreasing(self) -> bool:
        return all(
            cur.infidelity < prev.infidelity for prev, cur in zip(self.rows, self.rows[1:])
        )


def _scan_row(
    beta: complex, theta: float, probe: TwoModeState, method: ExactMethod
) -> ScanRow:
    if theta == 0:
        # Fixed beta at vanishing theta is the limit the ideal form describes.
        return ScanRow(theta=0.0, alpha=complex(math.nan, math.nan), infidelity=0.0)
    p = CdoParams.from_beta(beta, theta)
    try:
        infid = cdo_infidelity(p, probe, method=method)
    except TruncationRiskError as exc:
        raise TruncationRiskError(f"theta={theta}: {exc}") from exc
    logger.debug("theta=%g alpha=%s infidelity=%.6e", theta, p.alpha, infid)
    return ScanRow(theta=float(theta), alpha=p.alpha, infidelity=infid)


def convergence_scan(
    beta: complex,
    thetas: Sequence[float],
    probe: TwoModeState,
    method: ExactMethod = "auto",
    workers: Optional[int] = None,
) -> ConvergenceScan:
    """Infidelity of the ideal form against the exact one as theta shrinks at
    fixed ``beta`` (``alpha = i beta / theta``)."""
    if not thetas:
        raise ValueError("convergence scan needs at least one theta")
    beta = complex(beta)

    def run(theta: float) -> ScanRow:
        return _scan_row(beta, theta, probe, method)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(run, thetas))
    else:
        rows = tuple(run(theta) for theta in thetas)

    scan = ConvergenceScan(beta=beta, rows=rows)
    if not scan.monotone:
        logger.warning("CDO infidelity is not monotone over thetas %s", list(thetas))
    return scan


__all__ = [
    "DEFAULT_THETA",
    "CdoParams",
    "ConvergenceScan",
    "ScanRow",
    "apply_cdo",
    "cdo_infidelity",
    "convergence_scan",
    "exact_cdo",
    "exact_cdo_operator",
    "ideal_cdo",
    "ideal_cdo_operator",
    "resolve_method",
]
