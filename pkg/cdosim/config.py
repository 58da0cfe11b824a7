"""
Run configuration for the command-line scenarios.

A ``RunConfig`` is assembled from an optional TOML file and command-line
flags (flags win) and validated by pydantic. Its JSON dump is written back
into every report, and feeding that dump to ``RunConfig.model_validate``
reproduces the run.
"""

from __future__ import annotations

import enum
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    field_validator,
    model_validator,
)

from cdosim.cdo import DEFAULT_THETA
from cdosim.errors import ConfigError
from cdosim.fock import (
    DEFAULT_DIM_A,
    GUARD_FACTOR,
    ModeState,
    cat_state,
    coherent_state,
    fock_state,
    from_amplitudes,
    required_dim,
)
from cdosim.io import read_amplitudes
from cdosim.mzi import CdoMode
from cdosim.tomography import DEFAULT_GRID_B, DEFAULT_GRID_G, DEFAULT_GRID_H, DEFAULT_GRID_Z

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


logger = logging.getLogger("cdosim.config")

SCAN_THETAS = (0.04, 0.02, 0.01)
SCAN_BETA = -0.5j
SWITCH_BETA = 2.0
CAT_ALPHA0 = 1.5
BETA_TOL = 1e-12


def parse_complex(value: Any) -> complex:
    """Accept numbers, strings like ``"-0.5j"`` / ``"1+2i"`` and ``[re, im]``."""
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, str):
        text = value.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(text)
        except ValueError:
            raise ValueError(f"not a complex number: {value!r}") from None
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"not a complex number: {value!r}")


Complex = Annotated[
    complex,
    BeforeValidator(parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], when_used="json"),
]


class Scenario(str, enum.Enum):
    CDO_FIDELITY = "cdo-fidelity"
    PREPARE = "prepare"
    CAT = "cat"
    CHI = "chi"
    WIGNER = "wigner"


# ---------------------------------------------------------------------------
# Input-state mini-language
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpec:
    """Parsed form of ``vacuum | fock N | coherent A | cat A +|- | file PATH``."""

    kind: Literal["vacuum", "fock", "coherent", "cat", "file"]
    level: int = 0
    amplitude: complex = 0j
    sign: int = 1
    path: Optional[Path] = None

    @classmethod
    def parse(cls, text: str) -> "StateSpec":
        words = text.split()
        if not words:
            raise ConfigError("empty state specification")
        kind, args = words[0].lower(), words[1:]
        try:
            if kind == "vacuum" and not args:
                return cls("vacuum")
            if kind == "fock" and len(args) == 1:
                level = int(args[0])
                if level < 0:
                    raise ValueError(f"negative Fock level {level}")
                return cls("fock", level=level)
            if kind == "coherent" and len(args) == 1:
                return cls("coherent", amplitude=parse_complex(args[0]))
            if kind == "cat" and len(args) in (1, 2):
                sign = parse_sign(args[1]) if len(args) == 2 else 1
                return cls("cat", amplitude=parse_complex(args[0]), sign=sign)
            if kind == "file" and len(args) == 1:
                return cls("file", path=Path(args[0]))
        except ValueError as exc:
            raise ConfigError(f"bad state specification {text!r}: {exc}") from exc
        raise ConfigError(
            f"bad state specification {text!r}; expected vacuum, fock N, "
            "coherent A, cat A +|- or file PATH"
        )

    @property
    def label(self) -> str:
        if self.kind == "vacuum":
            return "vacuum"
        if self.kind == "fock":
            return f"fock {self.level}"
        if self.kind == "coherent":
            return f"coherent {self.amplitude}"
        if self.kind == "cat":
            return f"cat {self.amplitude} {'+' if self.sign > 0 else '-'}"
        return f"file {self.path}"

    @property
    def scale(self) -> float:
        """Rough phase-space radius of the state, for sizing the truncation."""
        if self.kind == "fock":
            return math.sqrt(self.level)
        return abs(self.amplitude)

    def build(self, d: int) -> ModeState:
        if self.kind == "vacuum":
            return fock_state(0, d)
        if self.kind == "fock":
            return fock_state(self.level, d)
        if self.kind == "coherent":
            return coherent_state(self.amplitude, d)
        if self.kind == "cat":
            return cat_state(self.amplitude, self.sign, d)
        return from_amplitudes(read_amplitudes(self.path), d)


def parse_sign(value: Any) -> int:
    if value in ("+", "+1", 1):
        return 1
    if value in ("-", "-1", -1):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {value!r}")


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: Scenario
    theta: Optional[List[float]] = None
    alpha: Optional[Complex] = None
    beta: Optional[Complex] = None
    dim_a: Optional[int] = Field(default=None, ge=2)
    mode: CdoMode = CdoMode.IDEAL
    grid_b: float = Field(default=DEFAULT_GRID_B, gt=0)
    grid_h: float = Field(default=DEFAULT_GRID_H, gt=0)
    grid_z: float = Field(default=DEFAULT_GRID_Z, gt=0)
    grid_g: float = Field(default=DEFAULT_GRID_G, gt=0)
    shots: Optional[int] = Field(default=None, ge=1)
    seed: int = 0
    efficiency: float = Field(default=1.0, gt=0, le=1)
    out: Path = Path("out")
    state: str = "vacuum"
    sign: Literal[1, -1] = 1
    alpha0: Complex = CAT_ALPHA0
    workers: Optional[int] = Field(default=None, ge=1)
    min_fidelity: Optional[float] = Field(default=None, ge=0, le=1)
    max_error: Optional[float] = Field(default=None, gt=0)

    @field_validator("theta", mode="before")
    @classmethod
    def _listify_theta(cls, value: Any) -> Any:
        if isinstance(value, (int, float)):
            return [value]
        return value

    @field_validator("theta")
    @classmethod
    def _check_theta(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if not value:
            raise ValueError("theta list must not be empty")
        for t in value:
            if not math.isfinite(t) or abs(t) > math.pi:
                raise ValueError(f"theta must be finite with |theta| <= pi, got {t}")
        return value

    @field_validator("sign", mode="before")
    @classmethod
    def _parse_sign(cls, value: Any) -> int:
        return parse_sign(value)

    @field_validator("state")
    @classmethod
    def _check_state(cls, value: str) -> str:
        try:
            StateSpec.parse(value)
        except ConfigError as exc:
            raise ValueError(str(exc)) from None
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        thetas = self.thetas
        if self.scenario is not Scenario.CDO_FIDELITY and len(thetas) != 1:
            raise ValueError(f"scenario {self.scenario.value} takes a single theta")
        if self.scenario is not Scenario.CDO_FIDELITY and thetas[0] == 0:
            raise ValueError("the interferometer needs a nonzero theta to displace")
        if self.alpha is not None and self.beta is not None:
            for t in thetas:
                if abs(self.beta - (-1j * t * self.alpha)) > BETA_TOL:
                    raise ValueError(
                        f"beta={self.beta} is inconsistent with -i*theta*alpha "
                        f"at theta={t}, alpha={self.alpha}"
                    )
        if self.alpha is not None and self.beta is None and thetas[0] == 0:
            raise ValueError("beta cannot be derived from alpha at theta = 0")
        for name, spacing, extent in (
            ("grid_h", self.grid_h, self.grid_b),
            ("grid_g", self.grid_g, self.grid_z),
        ):
            if spacing > extent:
                raise ValueError(f"{name}={spacing} exceeds its half-extent {extent}")
        return self

    @property
    def thetas(self) -> List[float]:
        if self.theta is not None:
            return list(self.theta)
        if self.scenario is Scenario.CDO_FIDELITY:
            return list(SCAN_THETAS)
        return [DEFAULT_THETA]

    @property
    def kerr_theta(self) -> float:
        return self.thetas[0]

    @property
    def state_spec(self) -> StateSpec:
        return StateSpec.parse(self.state)

    def resolved_beta(self) -> complex:
        """``beta`` from the flags, else from ``alpha``, else the scenario default."""
        if self.beta is not None:
            return self.beta
        if self.alpha is not None:
            return -1j * self.thetas[0] * self.alpha
        if self.scenario is Scenario.CDO_FIDELITY:
            return SCAN_BETA
        if self.scenario is Scenario.CAT:
            return -2.0 * self.alpha0
        return SWITCH_BETA

    def needed_amplitudes(self) -> Tuple[float, ...]:
        """Every displacement the scenario performs on mode a."""
        if self.scenario is Scenario.CDO_FIDELITY:
            return (abs(self.resolved_beta()),)
        if self.scenario is Scenario.CAT:
            beta = self.resolved_beta()
            return (abs(self.alpha0), abs(beta), abs(self.alpha0 + beta))
        scale = self.state_spec.scale
        if self.scenario is Scenario.PREPARE:
            beta = abs(self.resolved_beta())
            return (scale, beta, scale + beta)
        corner = math.sqrt(2.0) * self.grid_b
        amps = [scale, corner, scale + corner]
        if self.scenario is Scenario.WIGNER:
            amps.append(math.sqrt(2.0) * self.grid_z)
        return tuple(amps)

    def resolve_dim_a(self) -> int:
        """``dim_a`` if given, else the smallest dimension >= 32 passing every
        displacement guard of the scenario."""
        if self.dim_a is not None:
            return self.dim_a
        d = required_dim(*self.needed_amplitudes(), minimum=DEFAULT_DIM_A)
        spec = self.state_spec if self.scenario is not Scenario.CDO_FIDELITY else None
        if spec is not None and spec.kind == "fock":
            d = max(d, math.ceil((spec.level + 1) / GUARD_FACTOR))
        return int(d)


def load_toml(path: Path) -> Dict[str, Any]:
    try:
        with Path(path).open("rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    # Accept both flat files and a [run] table.
    return dict(data.get("run", data))


def build_config(
    scenario: str,
    overrides: Mapping[str, Any],
    config_file: Optional[Path] = None,
) -> RunConfig:
    """File values first, then every override that is not ``None``."""
    data: Dict[str, Any] = load_toml(config_file) if config_file else {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    data["scenario"] = scenario
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    logger.debug("run config: %s", cfg.model_dump(mode="json"))
    return cfg
