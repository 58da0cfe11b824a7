"""
Run configuration: state specs, complex parsing, TOML loading and the
cross-field checks on ``RunConfig``.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from cdosim.config import (
    RunConfig,
    Scenario,
    StateSpec,
    build_config,
    load_toml,
    parse_complex,
    parse_sign,
)
from cdosim.errors import ConfigError
from cdosim.mzi import CdoMode


@pytest.mark.parametrize(
    "text,expected",
    [
        ("-0.5j", -0.5j),
        ("1+2i", 1 + 2j),
        (" 3 ", 3 + 0j),
        (2, 2 + 0j),
        ([1, -1], 1 - 1j),
        (0.5j, 0.5j),
    ],
)
def test_parse_complex(text, expected):
    assert parse_complex(text) == expected


@pytest.mark.parametrize("bad", ["abc", [1, 2, 3], True, None])
def test_parse_complex_rejects(bad):
    with pytest.raises(ValueError):
        parse_complex(bad)


def test_parse_sign():
    assert parse_sign("+") == 1 and parse_sign(-1) == -1
    with pytest.raises(ValueError):
        parse_sign("plus")


@pytest.mark.parametrize(
    "text,kind,label",
    [
        ("vacuum", "vacuum", "vacuum"),
        ("fock 3", "fock", "fock 3"),
        ("coherent 1+1j", "coherent", "coherent (1+1j)"),
        ("cat 1.5 -", "cat", "cat (1.5+0j) -"),
        ("cat 2", "cat", "cat (2+0j) +"),
        ("file psi.txt", "file", "file psi.txt"),
    ],
)
def test_state_spec_parse(text, kind, label):
    spec = StateSpec.parse(text)
    assert spec.kind == kind
    assert spec.label == label


@pytest.mark.parametrize("bad", ["", "fock", "fock -1", "fock x", "squeezed 1", "cat 1 ?"])
def test_state_spec_rejects(bad):
    with pytest.raises(ConfigError):
        StateSpec.parse(bad)


def test_state_spec_builds_states(tmp_path):
    assert StateSpec.parse("fock 2").build(8).amplitudes[2] == 1
    path = tmp_path / "psi.txt"
    path.write_text("1,0\n0,1\n")
    state = StateSpec.parse(f"file {path}").build(4)
    assert state.dim == 4 and state.is_normalized()
    assert StateSpec.parse("fock 4").scale == 2.0


def test_defaults_per_scenario():
    scan = build_config("cdo-fidelity", {})
    assert scan.thetas == [0.04, 0.02, 0.01]
    assert scan.resolved_beta() == -0.5j
    cat = build_config("cat", {})
    assert cat.thetas == [0.01]
    assert cat.resolved_beta() == -3.0
    assert build_config("prepare", {}).resolved_beta() == 2.0


def test_beta_from_alpha():
    cfg = build_config("prepare", {"alpha": "50", "theta": [0.01]})
    assert cfg.resolved_beta() == pytest.approx(-0.5j)


def test_inconsistent_beta_is_rejected():
    with pytest.raises(ConfigError, match="inconsistent"):
        build_config("prepare", {"alpha": "50", "beta": "1", "theta": [0.01]})
    build_config("prepare", {"alpha": "50", "beta": "-0.5j", "theta": [0.01]})


def test_single_theta_outside_scan():
    with pytest.raises(ConfigError):
        build_config("prepare", {"theta": [0.01, 0.02]})
    with pytest.raises(ConfigError):
        build_config("chi", {"theta": [0.0]})
    assert build_config("cdo-fidelity", {"theta": [0.02, 0.0]}).thetas == [0.02, 0.0]


def test_unknown_and_out_of_range_fields():
    with pytest.raises(ConfigError):
        build_config("prepare", {"colour": "blue"})
    with pytest.raises(ConfigError):
        build_config("chi", {"efficiency": 0.0})
    with pytest.raises(ConfigError):
        build_config("prepare", {"state": "squeezed 1"})


def test_grid_spacing_beyond_extent_is_rejected():
    with pytest.raises(ConfigError, match="grid_h"):
        build_config("chi", {"grid_b": 1, "grid_h": 5})
    with pytest.raises(ConfigError, match="grid_g"):
        build_config("wigner", {"grid_z": 1, "grid_g": 2})
    cfg = build_config("chi", {"grid_b": 1, "grid_h": 1})
    assert cfg.grid_h == cfg.grid_b


def test_resolve_dim_a():
    assert build_config("prepare", {}).resolve_dim_a() == 32
    assert build_config("cat", {}).resolve_dim_a() == 36
    assert build_config("chi", {}).resolve_dim_a() == 200
    assert build_config("wigner", {"dim_a": 256}).resolve_dim_a() == 256
    # A Fock input needs its own level well inside the space.
    assert build_config("prepare", {"state": "fock 12", "beta": "0.1"}).resolve_dim_a() == 52


def test_toml_file_and_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[run]\nstate = "fock 1"\nshots = 500\nmode = "exact"\nout = "runs/x"\n')
    assert load_toml(path)["shots"] == 500
    cfg = build_config("chi", {"shots": 1000, "seed": None}, path)
    assert cfg.shots == 1000
    assert cfg.state == "fock 1"
    assert cfg.mode is CdoMode.EXACT
    assert cfg.out == Path("runs/x")
    assert cfg.scenario is Scenario.CHI


def test_flat_toml(tmp_path):
    path = tmp_path / "flat.toml"
    path.write_text("seed = 4\n")
    assert build_config("chi", {}, path).seed == 4


def test_bad_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("seed = \n")
    with pytest.raises(ConfigError):
        load_toml(path)
    with pytest.raises(ConfigError):
        load_toml(tmp_path / "missing.toml")


def test_json_dump_reproduces_config():
    cfg = build_config("cat", {"alpha0": "1.5-0.5j", "sign": "-", "min_fidelity": 0.9})
    dumped = cfg.model_dump(mode="json")
    assert dumped["alpha0"] == [1.5, -0.5]
    assert dumped["sign"] == -1
    assert RunConfig.model_validate(dumped) == cfg
