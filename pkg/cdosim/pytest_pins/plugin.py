"""
Pytest plugin implementation for pinned regression values.

Tests ask the ``pinned`` fixture to compare a simulated number with the
value recorded on the first run. The store is written back at session end.
"""

from pathlib import Path
from typing import Optional

import pytest

from .store import PinStore


# Global state for the plugin
_store: Optional[PinStore] = None


def pytest_addoption(parser):
    """Add plugin configuration options."""
    group = parser.getgroup("cdosim_pins")
    group.addoption(
        "--pins-refreeze",
        action="store_true",
        default=False,
        help="Discard pinned values and record them again",
    )
    group.addoption(
        "--pins-file",
        action="store",
        default=None,
        help="JSON file holding pinned values (default: test/pins.json)",
    )

    # Register ini options
    parser.addini(
        "cdosim_pins_file",
        "JSON file holding pinned values, relative to rootdir",
        type="string",
        default="test/pins.json",
    )
    parser.addini(
        "cdosim_pins_rtol",
        "Relative tolerance for pinned comparisons",
        type="string",
        default="1e-9",
    )


def pytest_configure(config):
    """Initialize the plugin."""
    global _store

    path = config.getoption("--pins-file", None) or config.getini("cdosim_pins_file")
    path = Path(path)
    if not path.is_absolute():
        path = Path(config.rootpath) / path
    _store = PinStore(
        path,
        rtol=float(config.getini("cdosim_pins_rtol")),
        refreeze=config.getoption("--pins-refreeze", False),
    )


class Pinner:
    """Bound to one test; keys are prefixed with the test's node id."""

    def __init__(self, store: PinStore, nodeid: str):
        self.store = store
        self.nodeid = nodeid

    def _key(self, name: str) -> str:
        return f"{self.nodeid}::{name}"

    def __call__(self, name: str, actual: float, rtol: Optional[float] = None) -> float:
        """Assert ``actual`` equals the pinned value within ``rtol``."""
        key = self._key(name)
        expected = self.store.lookup(key, actual)
        if expected is None:
            return float(actual)
        rel = self.store.rtol if rtol is None else rtol
        ok = float(actual) == pytest.approx(expected, rel=rel, abs=rel)
        self.store.mark(key, actual, expected, ok)
        assert ok, f"{name}: {actual!r} drifted from pinned {expected!r} (rtol {rel})"
        return expected

    def at_least(self, name: str, actual: float, slack: float = 0.0) -> float:
        """Assert ``actual`` has not dropped below the pinned value minus ``slack``."""
        key = self._key(name)
        expected = self.store.lookup(key, actual)
        if expected is None:
            return float(actual)
        ok = float(actual) >= expected - slack
        self.store.mark(key, actual, expected, ok)
        assert ok, f"{name}: {actual!r} fell below pinned bound {expected!r}"
        return expected


@pytest.fixture
def pinned(request) -> Pinner:
    if _store is None:
        pytest.skip("cdosim pin store not configured")
    return Pinner(_store, request.node.nodeid)


def pytest_sessionfinish(session, exitstatus):
    """Write new pins and report a summary at end of session."""
    if _store is None:
        return

    wrote = _store.save()
    summary = _store.get_summary()
    terminal_reporter = session.config.pluginmanager.get_plugin("terminalreporter")
    if terminal_reporter and _store.records:
        terminal_reporter.write_line(
            f"\n[cdosim-pins] {summary['matched']} matched, "
            f"{summary['recorded']} recorded, {summary['mismatched']} mismatched "
            f"({summary['total_pins']} pins in {_store.path})",
            bold=True,
            red=bool(summary["mismatched"]),
            cyan=not summary["mismatched"],
        )
        for record in summary["mismatches"]:
            terminal_reporter.write_line(
                f"  - {record.key}: {record.actual!r} vs pinned {record.expected!r}",
                yellow=True,
            )
        if wrote:
            terminal_reporter.write_line(f"[cdosim-pins] wrote {_store.path}")
