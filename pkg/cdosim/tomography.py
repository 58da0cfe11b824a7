"""
Characteristic-function tomography with the post-selection interferometer.

The click-probability difference of the MZI is

    dP(beta, xi0) = P10 - P01 = Re[exp(-i xi0) chi(beta)],   chi(beta) = Tr[rho D(beta)]

so two phase-shifter settings (``xi0 = 0`` and ``pi/2``) give the real and
imaginary parts of ``chi`` at one point. Sampling ``chi`` on a square lattice
and summing

    W(z) = (1/pi^2) sum_beta h^2 chi(beta) exp(z beta^* - z^* beta)

reconstructs the Wigner function. ``wigner_direct`` evaluates the displaced
parity ``(2/pi) Tr[rho D(z) P D(z)^dagger]`` independently as the oracle.

Lattice layout
--------------
A lattice with half-extent ``B`` and spacing ``h`` has axis
``x = h * (-n..n)``. ``ChiGrid.chi[j, k]`` holds ``chi(x[k] + i x[j])``,
and ``WignerGrid.values[j, k]`` holds ``W(z[k] + i z[j])``. Flat index
``f = j * N + k`` runs over the lattice row by row; ``N*N - 1 - f`` is the
point at ``-beta``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Literal, Optional, Tuple, Union

import numpy as np

from cdosim.elements import displace, displacement_kernel
from cdosim.errors import GridError, InsufficientStatisticsError, NyquistGuardError
from cdosim.fock import DensityMatrix, check_displacement_guard
from cdosim.mzi import MziParams, detection_probabilities


logger = logging.getLogger("cdosim.tomography")

DEFAULT_GRID_B = 5.0
DEFAULT_GRID_H = 0.2
DEFAULT_GRID_Z = 3.0
DEFAULT_GRID_G = 0.1

# Imaginary part tolerated in a reconstructed Wigner value.
IMAG_RESIDUE_TOL = 1e-6

Seed = Union[int, np.random.SeedSequence, None]


def lattice_axis(half_extent: float, spacing: float) -> np.ndarray:
    """Symmetric axis ``spacing * (-n..n)`` with ``n = round(half_extent / spacing)``."""
    if half_extent <= 0 or spacing <= 0:
        raise GridError(
            f"grid half-extent and spacing must be positive, got {half_extent}, {spacing}"
        )
    n = int(round(half_extent / spacing))
    if n == 0:
        raise GridError(f"spacing {spacing} exceeds twice the half-extent {half_extent}")
    if abs(n * spacing - half_extent) > 1e-9 * half_extent:
        logger.warning(
            "half-extent %g is not a multiple of spacing %g; using %g",
            half_extent,
            spacing,
            n * spacing,
        )
    return spacing * np.arange(-n, n + 1)


# ---------------------------------------------------------------------------
# Grid types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChiSample:
    beta: complex
    chi: complex
    dp0: float
    dp_half_pi: float
    shots: Optional[int] = None


@dataclass(frozen=True, eq=False)
class ChiGrid:
    axis: np.ndarray
    spacing: float
    half_extent: float
    chi: np.ndarray
    dp0: np.ndarray
    dp_half_pi: np.ndarray
    shots: Optional[int] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.axis.shape[0]

    @property
    def betas(self) -> np.ndarray:
        return self.axis[None, :] + 1j * self.axis[:, None]

    def __iter__(self) -> Iterator[ChiSample]:
        betas = self.betas
        for j in range(self.size):
            for k in range(self.size):
                yield ChiSample(
                    beta=complex(betas[j, k]),
                    chi=complex(self.chi[j, k]),
                    dp0=float(self.dp0[j, k]),
                    dp_half_pi=float(self.dp_half_pi[j, k]),
                    shots=self.shots,
                )

    def conjugation_defect(self) -> float:
        """``max |chi(beta)^* - chi(-beta)|``."""
        return float(np.max(np.abs(np.conj(self.chi) - self.chi[::-1, ::-1])))

    def boundary_max(self) -> float:
        """Largest ``|chi|`` on the lattice edge, a truncation diagnostic."""
        c = np.abs(self.chi)
        return float(max(c[0].max(), c[-1].max(), c[:, 0].max(), c[:, -1].max()))


@dataclass(frozen=True, eq=False)
class WignerGrid:
    axis: np.ndarray
    spacing: float
    half_extent: float
    values: np.ndarray
    max_imag_residue: float = 0.0
    source: Dict[str, Any] = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return self.axis[None, :] + 1j * self.axis[:, None]

    def normalization(self) -> float:
        """Riemann sum of ``W`` times ``g^2``."""
        return float(self.values.sum() * self.spacing**2)

    def at_origin(self) -> float:
        mid = self.axis.shape[0] // 2
        return float(self.values[mid, mid])


# ---------------------------------------------------------------------------
# Single-point measurements
# ---------------------------------------------------------------------------


def chi_direct(rho: DensityMatrix, beta: complex) -> complex:
    """``Tr[rho D(beta)]`` on the truncated space."""
    check_displacement_guard(beta, rho.dim, what="beta")
    d = displacement_kernel(rho.dim).matrix(beta)
    return complex(np.einsum("ij,ji->", rho.elements, d))


def delta_p(p: MziParams, rho: DensityMatrix, beta: complex, xi0: float) -> float:
    """``P10 - P01`` with the device set to displace by ``beta`` at ``xi = xi0``."""
    p01, p10 = detection_probabilities(p.with_beta(beta).tuned(xi0), rho)
    return p10 - p01


def chi_from_probabilities(p: MziParams, rho: DensityMatrix, beta: complex) -> ChiSample:
    dp0 = delta_p(p, rho, beta, 0.0)
    dp_half = delta_p(p, rho, beta, math.pi / 2)
    return ChiSample(beta=complex(beta), chi=complex(dp0, dp_half), dp0=dp0, dp_half_pi=dp_half)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    sigma: float
    shots: int
    registered: int
    successes: int
    exact: float


def monte_carlo_delta_p(
    p: MziParams,
    rho: DensityMatrix,
    beta: complex,
    xi0: float,
    shots: int,
    seed: Seed = None,
    efficiency: float = 1.0,
) -> MonteCarloEstimate:
    """Estimate ``dP`` from ``shots`` simulated photons.

    A photon is registered with probability ``efficiency`` and unregistered
    ones are discarded; each registered photon fires D1 with probability
    ``P10``. ``sigma`` is the binomial standard error
    ``2 sqrt(P10 P01 / registered)``.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if not 0.0 < efficiency <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {efficiency}")

    p01, p10 = detection_probabilities(p.with_beta(beta).tuned(xi0), rho)
    p_click = min(1.0, max(0.0, p10 / (p01 + p10)))

    rng = np.random.default_rng(seed)
    registered = shots if efficiency == 1.0 else int(rng.binomial(shots, efficiency))
    if registered == 0:
        raise InsufficientStatisticsError(
            f"no detections registered out of {shots} shots at efficiency {efficiency}"
        )
    successes = int(rng.binomial(registered, p_click))
    return MonteCarloEstimate(
        estimate=2.0 * successes / registered - 1.0,
        sigma=2.0 * math.sqrt(p_click * (1.0 - p_click) / registered),
        shots=shots,
        registered=registered,
        successes=successes,
        exact=2.0 * p_click - 1.0,
    )


# ---------------------------------------------------------------------------
# Lattice sampling
# ---------------------------------------------------------------------------


def sample_chi_grid(
    p: MziParams,
    rho: DensityMatrix,
    half_extent: float = DEFAULT_GRID_B,
    spacing: float = DEFAULT_GRID_H,
    shots: Optional[int] = None,
    seed: int = 0,
    efficiency: float = 1.0,
    workers: Optional[int] = None,
) -> ChiGrid:
    """Measure ``chi`` on the lattice through the interferometer.

    Only the half-lattice up to and including ``beta = 0`` is simulated; the
    rest is filled from ``chi(-beta) = chi(beta)^*``. With ``shots`` set every
    ``dP`` is a Monte Carlo estimate seeded from ``(seed, flat index,
    setting)``, so the result does not depend on ``workers``.
    """
    axis = lattice_axis(half_extent, spacing)
    corner = complex(axis[-1], axis[-1])
    check_displacement_guard(corner, rho.dim, what="grid corner beta")

    n = axis.shape[0]
    total = n * n
    center = (total - 1) // 2
    betas = (axis[None, :] + 1j * axis[:, None]).ravel()

    def measure(f: int) -> Tuple[float, float]:
        beta = complex(betas[f])
        if shots is None:
            return delta_p(p, rho, beta, 0.0), delta_p(p, rho, beta, math.pi / 2)
        readings = []
        for slot, xi0 in enumerate((0.0, math.pi / 2)):
            seq = np.random.SeedSequence(seed, spawn_key=(f, slot))
            est = monte_carlo_delta_p(p, rho, beta, xi0, shots, seq, efficiency)
            readings.append(est.estimate)
        return readings[0], readings[1]

    indices = range(center + 1)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(measure, indices))
    else:
        results = [measure(f) for f in indices]

    dp0 = np.empty(total)
    dp_half = np.empty(total)
    for f, (re, im) in enumerate(results):
        dp0[f], dp_half[f] = re, im
        if f == center:
            continue
        # chi(-beta) = chi(beta)^*: real part kept, imaginary part negated.
        dp0[total - 1 - f], dp_half[total - 1 - f] = re, -im

    dp0 = dp0.reshape(n, n)
    dp_half = dp_half.reshape(n, n)
    logger.info(
        "sampled chi on a %dx%d lattice (%d interferometer settings)", n, n, 2 * (center + 1)
    )
    return ChiGrid(
        axis=axis,
        spacing=float(spacing),
        half_extent=float(axis[-1]),
        chi=dp0 + 1j * dp_half,
        dp0=dp0,
        dp_half_pi=dp_half,
        shots=shots,
        provenance={
            "theta": p.cdo.theta,
            "cdo_mode": p.cdo_mode.value,
            "dim_a": int(rho.dim),
            "grid_b": float(half_extent),
            "grid_h": float(spacing),
            "shots": shots,
            "seed": seed if shots is not None else None,
            "efficiency": efficiency,
        },
    )


# ---------------------------------------------------------------------------
# Wigner reconstruction
# ---------------------------------------------------------------------------


def _check_nyquist(grid: ChiGrid, half_extent: float) -> None:
    if grid.spacing * 2.0 * half_extent >= math.pi:
        raise NyquistGuardError(
            f"chi spacing {grid.spacing} is too coarse for |z| <= {half_extent}: "
            f"h * 2Z = {grid.spacing * 2.0 * half_extent:.4g} >= pi"
        )


def wigner_from_chi(
    grid: ChiGrid,
    half_extent: float = DEFAULT_GRID_Z,
    spacing: float = DEFAULT_GRID_G,
    method: Literal["riemann", "direct"] = "riemann",
) -> WignerGrid:
    """Riemann-sum Fourier inversion of ``chi`` onto a ``z`` lattice.

    ``"riemann"`` factorizes the kernel ``exp(2i (Im z Re beta - Re z Im beta))``
    into two matrix products; ``"direct"`` sums it point by point. Both
    evaluate the same sum.
    """
    _check_nyquist(grid, half_extent)
    z = lattice_axis(half_extent, spacing)
    b = grid.axis
    weight = grid.spacing**2 / math.pi**2

    if method == "riemann":
        e = np.exp(2j * np.outer(z, b))
        w = weight * (e @ grid.chi.T @ e.conj().T)
    elif method == "direct":
        betas = grid.betas
        zs = z[None, :] + 1j * z[:, None]
        w = np.empty(zs.shape, dtype=np.complex128)
        for j in range(zs.shape[0]):
            for k in range(zs.shape[1]):
                kernel = np.exp(zs[j, k] * betas.conj() - np.conj(zs[j, k]) * betas)
                w[j, k] = weight * np.sum(grid.chi * kernel)
    else:
        raise ValueError(f"unknown quadrature {method!r}")

    residue = float(np.max(np.abs(w.imag))) if w.size else 0.0
    if residue > IMAG_RESIDUE_TOL:
        logger.warning(
            "inconsistent chi grid: Wigner imaginary residue %.3g > %g",
            residue,
            IMAG_RESIDUE_TOL,
        )
    return WignerGrid(
        axis=z,
        spacing=float(spacing),
        half_extent=float(z[-1]),
        values=w.real.copy(),
        max_imag_residue=residue,
        source={
            **grid.provenance,
            "chi_grid_b": grid.half_extent,
            "chi_grid_h": grid.spacing,
            "chi_boundary_max": grid.boundary_max(),
            "grid_z": float(z[-1]),
            "grid_g": float(spacing),
            "method": method,
        },
    )


def _parity_signs(d: int) -> np.ndarray:
    return np.where(np.arange(d) % 2 == 0, 1.0, -1.0)


def _weighted_components(rho: DensityMatrix) -> np.ndarray:
    """Columns ``sqrt(w_k) |phi_k>`` of the spectral decomposition."""
    comps = rho.spectral_components
    return np.stack([math.sqrt(w) * s.amplitudes for w, s in comps], axis=1)


def wigner_direct(rho: DensityMatrix, z: complex) -> float:
    """``(2/pi) Tr[rho D(z) P D(z)^dagger]`` with ``P`` the photon-number parity."""
    check_displacement_guard(z, rho.dim, what="z")
    shifted = displace(-complex(z), _weighted_components(rho), guard=False)
    return float(2.0 / math.pi * np.sum(_parity_signs(rho.dim)[:, None] * np.abs(shifted) ** 2))


def wigner_direct_grid(
    rho: DensityMatrix,
    half_extent: float = DEFAULT_GRID_Z,
    spacing: float = DEFAULT_GRID_G,
) -> WignerGrid:
    z = lattice_axis(half_extent, spacing)
    check_displacement_guard(complex(z[-1], z[-1]), rho.dim, what="grid corner z")
    columns = _weighted_components(rho)
    signs = _parity_signs(rho.dim)[:, None]
    values = np.empty((z.shape[0], z.shape[0]))
    for j, y in enumerate(z):
        for k, x in enumerate(z):
            shifted = displace(-complex(x, y), columns, guard=False)
            values[j, k] = 2.0 / math.pi * np.sum(signs * np.abs(shifted) ** 2)
    return WignerGrid(
        axis=z,
        spacing=float(spacing),
        half_extent=float(z[-1]),
        values=values,
        source={"method": "displaced-parity", "dim_a": int(rho.dim)},
    )


@dataclass(frozen=True)
class WignerComparison:
    max_error: float
    radius: float
    w0: float
    w0_oracle: float
    normalization: float
    chi_boundary_max: Optional[float] = None


def compare_wigner(
    reconstructed: WignerGrid,
    oracle: WignerGrid,
    radius: Optional[float] = None,
) -> WignerComparison:
    """Largest pointwise deviation on ``|z| <= radius`` (default ``Z/2``)."""
    if reconstructed.values.shape != oracle.values.shape or not np.allclose(
        reconstructed.axis, oracle.axis
    ):
        raise ValueError("Wigner grids are sampled on different lattices")
    radius = reconstructed.half_extent / 2 if radius is None else radius
    inside = np.abs(reconstructed.points) <= radius + 1e-12
    err = np.abs(reconstructed.values - oracle.values)[inside]
    return WignerComparison(
        max_error=float(err.max()),
        radius=float(radius),
        w0=reconstructed.at_origin(),
        w0_oracle=oracle.at_origin(),
        normalization=reconstructed.normalization(),
        chi_boundary_max=reconstructed.source.get("chi_boundary_max"),
    )
