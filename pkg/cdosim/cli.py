"""
``cdosim`` command line: each subcommand runs one scenario as a batch job.

    cdosim cdo-fidelity --theta 0.04 0.02 0.01 --beta -0.5j --out runs/scan
    cdosim cat --alpha0 1.5 --sign + --out runs/cat
    cdosim prepare --state vacuum --beta 2 --out runs/switch
    cdosim chi --state "fock 1" --shots 100000 --seed 7 --out runs/chi
    cdosim wigner --state "coherent 1" --out runs/wigner

Every run writes its tables plus ``report.json`` into ``--out``. Flags
override values from ``--config FILE`` (TOML). Exit status is 0 when the run
succeeded and every requested tolerance was met, 1 when a tolerance was
missed and 2 when a guard or configuration error stopped the run.

Environment (a ``.env`` in the working directory is loaded too):

* ``CDOSIM_LOG_LEVEL`` -- logging level, default ``INFO``.
"""

from __future__ import annotations

import argparse
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from dotenv import find_dotenv, load_dotenv

from cdosim import io
from cdosim.cdo import CdoParams, convergence_scan
from cdosim.config import RunConfig, Scenario, build_config
from cdosim.errors import CdosimError, NotNormalizedError
from cdosim.fock import (
    DensityMatrix,
    ModeState,
    cat_state,
    coherent_state,
    density_from_pure,
    fock_state,
    switch_state,
    tensor,
)
from cdosim.mzi import MziParams, describe_preparation
from cdosim.tomography import (
    chi_direct,
    compare_wigner,
    sample_chi_grid,
    wigner_direct_grid,
    wigner_from_chi,
)


logger = logging.getLogger("cdosim.cli")

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_ERROR = 2

# |beta + 2 alpha0| below which a coherent input is scored against the cat.
CAT_BETA_TOL = 1e-12


@dataclass
class RunReport:
    config: Dict[str, Any]
    files: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    tolerances_met: bool = True
    duration_s: float = 0.0


class _Run:
    """Collects outputs of one scenario and writes ``report.json`` at the end."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.started = time.perf_counter()
        self.report = RunReport(config=cfg.model_dump(mode="json"))
        cfg.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.cfg.out / name

    def produced(self, path: Path) -> None:
        self.report.files.append(str(path))

    def check(self, name: str, ok: bool) -> None:
        if not ok:
            logger.error("tolerance %s not met", name)
            self.report.tolerances_met = False

    def finish(self) -> RunReport:
        self.report.duration_s = time.perf_counter() - self.started
        io.write_json(self.path("report.json"), self.report)
        logger.info(
            "%s finished in %.2fs; files: %s",
            self.cfg.scenario.value,
            self.report.duration_s,
            ", ".join(self.report.files),
        )
        return self.report


def _mzi_params(cfg: RunConfig) -> MziParams:
    return MziParams(eta=0.0, cdo=CdoParams(0.0, cfg.kerr_theta), cdo_mode=cfg.mode)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def cmd_cdo_fidelity(cfg: RunConfig) -> RunReport:
    run = _Run(cfg)
    d = cfg.resolve_dim_a()
    probe = tensor(
        fock_state(1, d),
        ModeState([1.0, 1.0]).normalize(),
    )
    scan = convergence_scan(cfg.resolved_beta(), cfg.thetas, probe, workers=cfg.workers)
    run.produced(io.write_scan_csv(run.path("scan.csv"), scan))
    run.report.summary.update(
        beta=scan.beta,
        dim_a=d,
        infidelities=scan.infidelities,
        ratios=scan.ratios,
        orders=scan.orders,
        monotone=scan.monotone,
    )
    if cfg.max_error is not None:
        run.check("max_error", max(scan.infidelities) <= cfg.max_error)
    return run.finish()


def _prepare(
    cfg: RunConfig,
    psi: ModeState,
    beta: complex,
    sign: int,
    label: str,
    analytic: Optional[tuple],
) -> RunReport:
    run = _Run(cfg)
    report = describe_preparation(
        psi, beta, sign, _mzi_params(cfg), label=label, analytic=analytic
    )
    run.produced(
        io.write_amplitudes_csv(run.path("amplitudes.csv"), ModeState(report.amplitudes))
    )
    run.produced(io.write_json(run.path("prepared.json"), report))
    run.report.summary.update(
        dim_a=psi.dim,
        success_probability=report.success_probability,
        direct_fidelity=report.direct_fidelity,
        analytic_target=report.analytic_target,
        analytic_fidelity=report.analytic_fidelity,
    )
    if cfg.min_fidelity is not None:
        achieved = (
            report.analytic_fidelity
            if report.analytic_fidelity is not None
            else report.direct_fidelity
        )
        run.check("min_fidelity", achieved >= cfg.min_fidelity)
    return run.finish()


def _target(name: str, build: Callable[[], ModeState]) -> Optional[tuple]:
    try:
        return name, build()
    except NotNormalizedError:
        # The two branches cancel; post-selection reports the degeneracy.
        logger.debug("no %s target: the superposition vanishes", name)
        return None


def _analytic_target(
    kind: str, amplitude: complex, beta: complex, sign: int, d: int
) -> Optional[tuple]:
    """Closed-form target when the input makes one: a cat or a switch state."""
    if kind == "vacuum":
        return _target("switch", lambda: switch_state(beta, sign, d))
    if kind == "coherent" and abs(beta + 2 * amplitude) < CAT_BETA_TOL:
        return _target("cat", lambda: cat_state(amplitude, sign, d))
    return None


def cmd_prepare(cfg: RunConfig) -> RunReport:
    d = cfg.resolve_dim_a()
    spec = cfg.state_spec
    beta = cfg.resolved_beta()
    return _prepare(
        cfg,
        spec.build(d),
        beta,
        cfg.sign,
        spec.label,
        _analytic_target(spec.kind, spec.amplitude, beta, cfg.sign, d),
    )


def cmd_cat(cfg: RunConfig) -> RunReport:
    d = cfg.resolve_dim_a()
    beta = cfg.resolved_beta()
    if abs(beta + 2 * cfg.alpha0) >= CAT_BETA_TOL:
        logger.warning(
            "beta=%s is not -2*alpha0 for alpha0=%s; reporting the direct target only",
            beta,
            cfg.alpha0,
        )
    return _prepare(
        cfg,
        coherent_state(cfg.alpha0, d),
        beta,
        cfg.sign,
        f"coherent {cfg.alpha0}",
        _analytic_target("coherent", cfg.alpha0, beta, cfg.sign, d),
    )


def _sample(cfg: RunConfig, run: _Run) -> tuple:
    d = cfg.resolve_dim_a()
    spec = cfg.state_spec
    rho: DensityMatrix = density_from_pure(spec.build(d))
    grid = sample_chi_grid(
        _mzi_params(cfg),
        rho,
        cfg.grid_b,
        cfg.grid_h,
        shots=cfg.shots,
        seed=cfg.seed,
        efficiency=cfg.efficiency,
        workers=cfg.workers,
    )
    grid.provenance["state"] = spec.label
    run.produced(io.write_chi_csv(run.path("chi.csv"), grid))
    run.produced(io.write_json(run.path("chi.json"), grid.provenance))
    return rho, grid


def cmd_chi(cfg: RunConfig) -> RunReport:
    run = _Run(cfg)
    rho, grid = _sample(cfg, run)
    direct = [chi_direct(rho, s.beta) for s in grid]
    deviation = max(abs(s.chi - c) for s, c in zip(grid, direct))
    mid = grid.size // 2
    run.report.summary.update(
        dim_a=rho.dim,
        chi0=complex(grid.chi[mid, mid]),
        max_abs_chi=float(abs(grid.chi).max()),
        conjugation_defect=grid.conjugation_defect(),
        boundary_max=grid.boundary_max(),
        max_error_vs_direct=deviation,
    )
    if cfg.max_error is not None:
        run.check("max_error", deviation <= cfg.max_error)
    return run.finish()


def cmd_wigner(cfg: RunConfig) -> RunReport:
    run = _Run(cfg)
    rho, grid = _sample(cfg, run)
    recon = wigner_from_chi(grid, cfg.grid_z, cfg.grid_g)
    oracle = wigner_direct_grid(rho, cfg.grid_z, cfg.grid_g)
    cmp = compare_wigner(recon, oracle)
    run.produced(io.write_wigner_csv(run.path("wigner.csv"), recon))
    run.produced(io.write_json(run.path("wigner.json"), recon.source))
    run.report.summary.update(
        dim_a=rho.dim,
        max_error=cmp.max_error,
        radius=cmp.radius,
        w0=cmp.w0,
        w0_oracle=cmp.w0_oracle,
        normalization=cmp.normalization,
        max_imag_residue=recon.max_imag_residue,
        chi_boundary_max=cmp.chi_boundary_max,
    )
    if cfg.max_error is not None:
        run.check("max_error", cmp.max_error <= cfg.max_error)
    return run.finish()


COMMANDS: Dict[Scenario, Callable[[RunConfig], RunReport]] = {
    Scenario.CDO_FIDELITY: cmd_cdo_fidelity,
    Scenario.PREPARE: cmd_prepare,
    Scenario.CAT: cmd_cat,
    Scenario.CHI: cmd_chi,
    Scenario.WIGNER: cmd_wigner,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    # Defaults stay None so that only flags actually given override the file.
    common = argparse.ArgumentParser(add_help=False)
    physics = common.add_argument_group("physics")
    physics.add_argument("--theta", type=float, nargs="+", help="Kerr phase(s) in radians")
    physics.add_argument("--alpha", help="beam-splitter displacement, e.g. 50 or 1+2j")
    physics.add_argument("--beta", help="conditional displacement, e.g. -0.5j")
    physics.add_argument("--dim-a", type=int, help="Fock levels kept for mode a")
    physics.add_argument("--mode", choices=["ideal", "exact"], help="CDO model")
    physics.add_argument("--state", help="vacuum | fock N | coherent A | cat A +|- | file PATH")
    physics.add_argument("--sign", choices=["+", "-"], help="superposition branch")
    physics.add_argument("--alpha0", help="coherent amplitude for the cat scenario")

    grid = common.add_argument_group("grid")
    grid.add_argument("--grid-b", type=float, help="chi lattice half-extent B")
    grid.add_argument("--grid-h", type=float, help="chi lattice spacing h")
    grid.add_argument("--grid-z", type=float, help="Wigner lattice half-extent Z")
    grid.add_argument("--grid-g", type=float, help="Wigner lattice spacing g")

    sampling = common.add_argument_group("sampling")
    sampling.add_argument("--shots", type=int, help="photons per dP estimate")
    sampling.add_argument("--seed", type=int, help="master seed")
    sampling.add_argument("--efficiency", type=float, help="detection efficiency in (0, 1]")
    sampling.add_argument("--workers", type=int, help="threads for grid and scan loops")

    checks = common.add_argument_group("tolerances")
    checks.add_argument("--min-fidelity", type=float)
    checks.add_argument("--max-error", type=float)

    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--config", type=Path, help="TOML file with defaults")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdosim",
        description="Conditional displacement, MZI post-selection and Wigner tomography",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    common = _common_flags()
    for scenario in Scenario:
        sub.add_parser(scenario.value, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        k: v for k, v in vars(args).items() if k not in ("scenario", "config")
    }
    return build_config(args.scenario, overrides, args.config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    logging.basicConfig(
        level=os.environ.get("CDOSIM_LOG_LEVEL", "INFO"),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = COMMANDS[cfg.scenario](cfg)
    except CdosimError as exc:
        logger.error("%s failed: %s: %s", args.scenario, type(exc).__name__, exc)
        return EXIT_ERROR
    return EXIT_OK if report.tolerances_met else EXIT_TOLERANCE


if __name__ == "__main__":
    raise SystemExit(main())
