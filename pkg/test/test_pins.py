"""
The pinned-value store behind the ``pinned`` fixture.
"""

from __future__ import annotations

import json

import pytest

from cdosim.pytest_pins.plugin import Pinner
from cdosim.pytest_pins.store import PinStore


def test_first_lookup_records(tmp_path):
    store = PinStore(tmp_path / "pins.json")
    assert store.lookup("t::x", 1.5) is None
    assert store.dirty
    assert store.lookup("t::x", 2.0) == 1.5
    assert [r.status for r in store.records] == ["recorded"]


def test_save_and_reload(tmp_path):
    path = tmp_path / "sub" / "pins.json"
    store = PinStore(path)
    store.lookup("b", 2.0)
    store.lookup("a", 1.0)
    assert store.save() is True
    assert store.save() is False
    assert list(json.loads(path.read_text())) == ["a", "b"]

    again = PinStore(path)
    assert again.values == {"a": 1.0, "b": 2.0}
    assert not again.dirty
    assert PinStore(path, refreeze=True).values == {}


def test_summary_counts(tmp_path):
    store = PinStore(tmp_path / "pins.json")
    store.lookup("a", 1.0)
    store.mark("a", 1.0, 1.0, True)
    store.mark("a", 3.0, 1.0, False)
    summary = store.get_summary()
    assert (summary["recorded"], summary["matched"], summary["mismatched"]) == (1, 1, 1)
    assert summary["total_pins"] == 1
    assert summary["mismatches"][0].actual == 3.0


def test_pinner_compares_with_tolerance(tmp_path):
    store = PinStore(tmp_path / "pins.json", rtol=1e-6)
    pin = Pinner(store, "test_x.py::test_y")
    assert pin("fid", 0.5) == 0.5
    assert "test_x.py::test_y::fid" in store.values
    pin("fid", 0.5 + 1e-9)
    with pytest.raises(AssertionError, match="drifted"):
        pin("fid", 0.6)


def test_pinner_lower_bound(tmp_path):
    pin = Pinner(PinStore(tmp_path / "pins.json"), "node")
    pin.at_least("fid", 0.99)
    pin.at_least("fid", 0.995)
    pin.at_least("fid", 0.99 - 1e-10, slack=1e-9)
    with pytest.raises(AssertionError, match="fell below"):
        pin.at_least("fid", 0.98)
