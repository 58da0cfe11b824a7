"""
Pinned regression values for the test suite.

Values that are derived from a simulation rather than a closed form are
recorded the first time a test sees them and compared against the recorded
value on every later run.
"""

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import jsonpickle


@dataclass
class PinRecord:
    """Outcome of one pin lookup during the session."""

    key: str
    actual: float
    expected: Optional[float]
    status: str  # "recorded", "matched", "mismatched"
    checked_at: datetime = field(default_factory=datetime.now)


class PinStore:
    """
    JSON-backed map from test-scoped names to floats.

    This class maintains:
    - The pinned values loaded from (and written back to) ``path``
    - Whether anything new was recorded this session
    - A record of every lookup, for the session summary
    """

    def __init__(self, path: Path, rtol: float = 1e-9, refreeze: bool = False):
        self.path = Path(path)
        self.rtol = rtol
        self.refreeze = refreeze
        self.values: Dict[str, float] = {}
        self.records: List[PinRecord] = []
        self.dirty = False
        if self.path.exists() and not refreeze:
            self.values = {
                str(k): float(v)
                for k, v in jsonpickle.decode(self.path.read_text()).items()
            }

    def lookup(self, key: str, actual: float) -> Optional[float]:
        """Return the pinned value for ``key``, recording ``actual`` if none exists.

        ``None`` means the value was recorded just now.
        """
        actual = float(actual)
        if key not in self.values:
            self.values[key] = actual
            self.dirty = True
            self.records.append(PinRecord(key, actual, None, "recorded"))
            return None
        return self.values[key]

    def mark(self, key: str, actual: float, expected: float, ok: bool) -> None:
        self.records.append(
            PinRecord(key, float(actual), expected, "matched" if ok else "mismatched")
        )

    def save(self) -> bool:
        """Write the pins back if anything was recorded; return whether it wrote."""
        if not self.dirty:
            return False
        self.path.parent.mkdir(parents=True, exist_ok=True)
        ordered = {k: self.values[k] for k in sorted(self.values)}
        self.path.write_text(jsonpickle.encode(ordered, indent=2) + "\n")
        self.dirty = False
        return True

    def get_summary(self) -> dict:
        """Get summary statistics."""
        counts = {"recorded": 0, "matched": 0, "mismatched": 0}
        for record in self.records:
            counts[record.status] += 1
        return {
            **counts,
            "total_pins": len(self.values),
            "mismatches": [r for r in self.records if r.status == "mismatched"],
        }
