"""
CSV tables and JSON reports.

Floats are written with ``repr`` so the same run always produces the same
bytes. JSON goes through jsonpickle after complex numbers and arrays are
flattened to ``[re, im]`` pairs and lists.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import jsonpickle
import jsonpickle.backend
import numpy as np

from cdosim.cdo import ConvergenceScan
from cdosim.errors import ConfigError
from cdosim.fock import ModeState
from cdosim.tomography import ChiGrid, WignerGrid


logger = logging.getLogger("cdosim.io")

CHI_HEADER = ("beta_re", "beta_im", "chi_re", "chi_im", "dp0", "dp_half_pi", "shots")
WIGNER_HEADER = ("z_re", "z_im", "w")
SCAN_HEADER = ("theta", "alpha_re", "alpha_im", "infidelity")
AMPLITUDE_HEADER = ("n", "re", "im", "probability")

_json = jsonpickle.backend.JSONBackend()
_json.set_encoder_options("json", sort_keys=True)


def _num(x: float) -> str:
    return repr(float(x))


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.debug("wrote %s", path)
    return path


def write_chi_csv(path: Path, grid: ChiGrid) -> Path:
    shots = "" if grid.shots is None else str(grid.shots)
    rows = (
        (
            _num(s.beta.real),
            _num(s.beta.imag),
            _num(s.chi.real),
            _num(s.chi.imag),
            _num(s.dp0),
            _num(s.dp_half_pi),
            shots,
        )
        for s in grid
    )
    return _write_rows(path, CHI_HEADER, rows)


def write_wigner_csv(path: Path, grid: WignerGrid) -> Path:
    points = grid.points
    rows = (
        (_num(points[j, k].real), _num(points[j, k].imag), _num(grid.values[j, k]))
        for j in range(points.shape[0])
        for k in range(points.shape[1])
    )
    return _write_rows(path, WIGNER_HEADER, rows)


def write_scan_csv(path: Path, scan: ConvergenceScan) -> Path:
    rows = (
        (_num(r.theta), _num(r.alpha.real), _num(r.alpha.imag), _num(r.infidelity))
        for r in scan.rows
    )
    return _write_rows(path, SCAN_HEADER, rows)


def write_amplitudes_csv(path: Path, state: ModeState) -> Path:
    rows = (
        (str(n), _num(c.real), _num(c.imag), _num(abs(c) ** 2))
        for n, c in enumerate(state.amplitudes)
    )
    return _write_rows(path, AMPLITUDE_HEADER, rows)


def read_amplitudes(path: Path) -> List[complex]:
    """Newline-separated ``re,im`` pairs; blank lines and ``#`` comments skipped."""
    values: List[complex] = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read amplitude file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 're,im', got {line!r}")
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    if not values:
        raise ConfigError(f"amplitude file {path} holds no amplitudes")
    return values


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_plain(value: Any) -> Any:
    """Reduce ``value`` to JSON-ready builtins."""
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (bool, str, int)) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(value.real), to_plain(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, Path):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(value: Any) -> str:
    return jsonpickle.encode(
        to_plain(value), unpicklable=False, make_refs=False, indent=2, backend=_json
    )


def write_json(path: Path, value: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(value) + "\n")
    logger.debug("wrote %s", path)
    return path


def read_json(path: Path) -> Any:
    return jsonpickle.decode(Path(path).read_text(), backend=_json)
