"""
Mach-Zehnder post-selection: a single photon shared between arms b and c
drives the CDO in arm b, and a click pattern at the output heralds
``|psi> +/- D(beta)|psi>`` in mode a.

Pipeline, on the dual-rail blocks ``(u, v) = (|0>_b|1>_c, |1>_b|0>_c)``::

    |psi>_a |0>_b|1>_c --BS1--> PS(eta) on u --CDO(a, b)--> BS2 --> detect

After BS2 the register holds

    u = (1/2) e^{-i phi} [e^{i xi} - D(beta)] |psi>
    v = (i/2) e^{-i phi} [e^{i xi} + D(beta)] |psi>

with ``phi = theta |alpha|^2`` and ``xi = eta + phi``, so D1 firing
(``|1>_b|0>_c``) selects the "+" branch and D2 the "-" branch.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from cdosim.cdo import DEFAULT_THETA, CdoParams, ExactMethod, apply_cdo
from cdosim.elements import BS5050, displace, phase_shifter
from cdosim.errors import DegeneratePostselectionError
from cdosim.fock import (
    DUAL_RAIL_01,
    DUAL_RAIL_10,
    DensityMatrix,
    ModeState,
    ThreeSystemState,
    fidelity,
    mixture,
)


logger = logging.getLogger("cdosim.mzi")

# Branch probabilities below this cannot be normalized meaningfully.
DEGENERATE_THRESHOLD = 1e-12


class CdoMode(str, enum.Enum):
    IDEAL = "ideal"
    EXACT = "exact"


class Detection(str, enum.Enum):
    """Which detector clicks; the value names the dual-rail pattern."""

    D1_FIRES = "10"
    D2_FIRES = "01"

    @property
    def pattern(self) -> Tuple[int, int]:
        return DUAL_RAIL_10 if self is Detection.D1_FIRES else DUAL_RAIL_01

    @property
    def sign(self) -> int:
        return 1 if self is Detection.D1_FIRES else -1

    @classmethod
    def for_sign(cls, sign: int) -> "Detection":
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        return cls.D1_FIRES if sign > 0 else cls.D2_FIRES


@dataclass(frozen=True)
class MziParams:
    eta: float
    cdo: CdoParams = field(default_factory=lambda: CdoParams(0.0, DEFAULT_THETA))
    cdo_mode: CdoMode = CdoMode.IDEAL
    exact_method: ExactMethod = "auto"

    def __post_init__(self):
        object.__setattr__(self, "cdo_mode", CdoMode(self.cdo_mode))

    @property
    def xi(self) -> float:
        """Interferometric phase ``eta + theta |alpha|^2``."""
        return self.eta + self.cdo.kerr_phase

    def tuned(self, xi0: float = 0.0) -> "MziParams":
        """Same device with the phase shifter set so that ``xi == xi0``."""
        return replace(self, eta=xi0 - self.cdo.kerr_phase)

    def with_beta(self, beta: complex) -> "MziParams":
        """Same Kerr phase, beam splitters reset to reach ``beta``."""
        return replace(self, cdo=CdoParams.from_beta(beta, self.cdo.theta))


@dataclass(frozen=True)
class DetectionOutcome:
    which: Detection
    probability: float
    conditional_state: ModeState


# ---------------------------------------------------------------------------
# Interferometer
# ---------------------------------------------------------------------------


def build_mzi_input(psi: ModeState) -> ThreeSystemState:
    """``|psi>_a |0>_b |1>_c``."""
    psi.require_normalized("MZI input")
    return ThreeSystemState.from_blocks(
        psi.amplitudes, np.zeros(psi.dim, dtype=np.complex128)
    )


def run_mzi(p: MziParams, psi: ModeState) -> ThreeSystemState:
    s = build_mzi_input(psi)
    s = BS5050.apply(s)
    s = phase_shifter(p.eta).apply(s)
    s = apply_cdo(
        p.cdo, s, ideal=p.cdo_mode is CdoMode.IDEAL, method=p.exact_method
    )
    s = BS5050.apply(s)
    return s


def detection_probabilities(p: MziParams, rho: DensityMatrix) -> Tuple[float, float]:
    """``(P01, P10)`` for the two click patterns, from the simulated output.

    Mixed inputs run the interferometer once per spectral component.
    """
    if rho.pure_state is None:
        rho.validate()
    p01 = p10 = 0.0
    for weight, component in rho.spectral_components:
        u, v = run_mzi(p, component).dual_rail_blocks()
        p01 += weight * float(np.vdot(u, u).real)
        p10 += weight * float(np.vdot(v, v).real)
    return p01, p10


def _canonical_phase(amplitudes: np.ndarray) -> np.ndarray:
    """Rotate so the largest amplitude is real and positive."""
    lead = amplitudes[int(np.argmax(np.abs(amplitudes)))]
    return amplitudes * (abs(lead) / lead)


def postselect(s: ThreeSystemState, which: Detection) -> DetectionOutcome:
    """Project the register onto ``which`` and renormalize mode a.

    The overall phase of the conditional state is discarded.
    """
    u, v = s.dual_rail_blocks()
    block = v if which is Detection.D1_FIRES else u
    prob = float(np.vdot(block, block).real)
    if prob < DEGENERATE_THRESHOLD:
        raise DegeneratePostselectionError(
            f"pattern {which.value} has probability {prob:.3g} "
            f"< {DEGENERATE_THRESHOLD}"
        )
    state = ModeState(_canonical_phase(block / np.sqrt(prob)))
    return DetectionOutcome(which=which, probability=prob, conditional_state=state)


def prepare_superposition(
    psi: ModeState, beta: complex, sign: int, p: MziParams
) -> DetectionOutcome:
    """Herald ``|psi> + sign D(beta)|psi>``.

    The phase shifter of ``p`` is retuned to ``eta = -theta |alpha|^2``
    (``xi = 0``) for the requested ``beta``; only its Kerr phase and CDO mode
    are used.
    """
    tuned = p.with_beta(beta).tuned(0.0)
    outcome = postselect(run_mzi(tuned, psi), Detection.for_sign(sign))
    logger.debug(
        "prepared sign=%+d beta=%s with probability %.6f", sign, beta, outcome.probability
    )
    return outcome


def branch_mixture(psi: ModeState, beta: complex, p: MziParams) -> DensityMatrix:
    """``P+ |psi+><psi+| + P- |psi-><psi-|`` at ``xi = 0``.

    In ideal mode this equals ``(|psi><psi| + D|psi><psi|D^dagger) / 2``.
    Degenerate branches contribute nothing.
    """
    tuned = p.with_beta(beta).tuned(0.0)
    s = run_mzi(tuned, psi)
    components = []
    for which in Detection:
        try:
            outcome = postselect(s, which)
        except DegeneratePostselectionError:
            continue
        components.append((outcome.probability, outcome.conditional_state))
    return mixture(components)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def superposition_target(psi: ModeState, beta: complex, sign: int) -> ModeState:
    """``|psi> + sign D(beta)|psi>`` computed directly, normalized."""
    return ModeState(psi.amplitudes + sign * displace(beta, psi.amplitudes)).normalize()


@dataclass
class PreparedStateReport:
    """What a preparation run produced, ready for JSON.

    The conditional state is stored up to a global phase: the heralded branch
    carries a prefactor ``(1/2) e^{-i theta |alpha|^2}`` that normalization
    drops.
    """

    input_label: str
    beta: complex
    sign: int
    cdo_mode: str
    theta: float
    success_probability: float
    direct_fidelity: float
    analytic_target: Optional[str] = None
    analytic_fidelity: Optional[float] = None
    global_phase: str = "discarded"
    amplitudes: Optional[np.ndarray] = field(default=None, repr=False)


def describe_preparation(
    psi: ModeState,
    beta: complex,
    sign: int,
    p: MziParams,
    label: str = "",
    analytic: Optional[Tuple[str, ModeState]] = None,
) -> PreparedStateReport:
    outcome = prepare_superposition(psi, beta, sign, p)
    state = outcome.conditional_state
    report = PreparedStateReport(
        input_label=label,
        beta=complex(beta),
        sign=sign,
        cdo_mode=p.cdo_mode.value,
        theta=p.cdo.theta,
        success_probability=outcome.probability,
        direct_fidelity=fidelity(state, superposition_target(psi, beta, sign)),
        amplitudes=state.amplitudes,
    )
    if analytic is not None:
        report.analytic_target, target = analytic
        report.analytic_fidelity = fidelity(state, target)
    return report
