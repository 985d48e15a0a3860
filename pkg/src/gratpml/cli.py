"""Command-line interface.

    gratpml solve         --config run.cfg [--out DIR]
    gratpml validate-flat --config run.cfg [--out DIR]
    gratpml efficiency    --config run.cfg [--out DIR]
    gratpml pml-calibrate --config run.cfg
    gratpml mesh-info     --config run.cfg [--out DIR]

Exit codes: 0 success, 2 configuration problem (bad file, bad geometry,
inadmissible parameters), 3 numerical failure (resonance, singular system,
calibration impossible, trace coverage).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .adapt import (
    run,
    setup,
    write_convergence_csv,
    write_efficiency_csv,
    write_summary,
    write_vtk_series,
)
from .config import ConfigError, RunConfig, load_config
from .exact import fit_slope
from .meshing import GeometryError, generate_initial, write_vtk
from .pml import CalibrationError, compute_zeta, make_pml, modeling_constants
from .rayleigh import ParameterRegimeError, TraceError
from .solver import SolverError
from .waves import ResonanceError

__all__ = ["main"]

_CONFIG_ERRORS = (ConfigError, GeometryError, ValueError)
_NUMERICAL_ERRORS = (
    SolverError,
    CalibrationError,
    ResonanceError,
    TraceError,
    ParameterRegimeError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gratpml",
        description=(
            "Adaptive finite elements for elastic wave scattering by "
            "periodic grating surfaces"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "solve": "run the adaptive loop and write reports",
        "validate-flat": "convergence study against the exact flat solution",
        "efficiency": "single solve on the initial mesh, print efficiencies",
        "pml-calibrate": "tabulate layer constants over the thickness grid",
        "mesh-info": "generate the initial mesh and print its statistics",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress")
        p.add_argument(
            "--threads",
            type=int,
            help="cap BLAS/OpenMP threads (set before numpy work, best effort)",
        )
    return parser


def _progress_printer(quiet: bool):
    if quiet:
        return None

    def emit(rec):
        true_part = (
            f" trueH1={rec.true_error:.3e}" if np.isfinite(rec.true_error) else ""
        )
        print(
            f"iter {rec.iteration:2d}: dofs={rec.n_dofs:7d} "
            f"eta={rec.global_eta:.3e} eps_fem={rec.eps_fem:.3e} "
            f"eps_pml={rec.eps_pml:.3e} energy={rec.energy_total:.6f}"
            f"{true_part}"
        )

    return emit


def _outdir(cfg: RunConfig, args) -> str:
    out = args.out if args.out else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _write_reports(result, out: str, cfg: RunConfig) -> None:
    write_convergence_csv(result, os.path.join(out, "convergence.csv"))
    if result.records:
        write_efficiency_csv(
            result.final.efficiency, os.path.join(out, "efficiency.csv")
        )
    write_summary(result, os.path.join(out, "run_summary.txt"))
    if cfg.write_vtk:
        write_vtk_series(result, out)


def _cmd_solve(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    result = run(cfg, progress=_progress_printer(args.quiet))
    _write_reports(result, out, cfg)
    if cfg.write_system and result.records:
        from .assembly import assemble, build_dofmap

        rec = result.final
        dofmap = build_dofmap(rec.mesh, result.ctx, cfg.amplitude)
        system = assemble(
            rec.mesh, result.ctx, result.profile, dofmap,
            quad_degree=cfg.quad_degree, amplitude=cfg.amplitude,
        )
        system.write_matrix_market(os.path.join(out, "system.mtx"))
    if not args.quiet:
        print(f"stopped: {result.stop_reason}; reports in {out}/")
    return 0


def _cmd_validate_flat(cfg: RunConfig, args) -> int:
    cfg.grating = "flat"
    cfg.grating_file = None
    out = _outdir(cfg, args)
    result = run(cfg, progress=_progress_printer(args.quiet))
    _write_reports(result, out, cfg)
    dofs = np.array([r.n_dofs for r in result.records], dtype=float)
    errs = np.array([r.true_error for r in result.records], dtype=float)
    keep = np.isfinite(errs) & (errs > 0)
    if keep.sum() >= 2:
        slope = fit_slope(dofs[keep], errs[keep])
        print(f"true-error slope (last fits): {slope:.4f} "
              f"(optimal for P1 is -0.5)")
    else:
        print("not enough iterations for a slope fit")
    print(f"iterations: {len(result.records)}, stop: {result.stop_reason}")
    return 0


def _cmd_efficiency(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    cfg.max_iters = 1
    result = run(cfg, progress=None)
    rec = result.final
    write_efficiency_csv(rec.efficiency, os.path.join(out, "efficiency.csv"))
    eff = rec.efficiency
    print(f"initial mesh: {rec.n_nodes} nodes, {rec.n_dofs} dofs")
    for n, e1, e2 in zip(eff.n, eff.e1, eff.e2):
        if np.isnan(e1) and np.isnan(e2):
            continue
        print(f"  n = {int(n):+d}: compressional = {e1:.12g}, shear = {e2:.12g}")
    print(f"  total = {eff.total:.12g} (defect {abs(eff.total - 1.0):.3e})")
    return 0


def _cmd_pml_calibrate(cfg: RunConfig, args) -> int:
    from .waves import build_mode_table, derive_context

    ctx = derive_context(
        omega=cfg.omega, lam=cfg.lam, mu=cfg.mu, theta=cfg.theta,
        period=cfg.period, gamma_height=cfg.gamma_height,
    )
    modes = build_mode_table(ctx, cfg.n_max, cfg.resonance_tol)
    target = cfg.target_fhat if cfg.target_fhat is not None else 1e-8
    sqrt_period = float(np.sqrt(ctx.period))
    print(f"target: F_hat * sqrt(period) <= {target:.3g}")
    print(f"{'delta':>10} {'Re zeta':>10} {'F':>12} {'F_hat':>12} "
          f"{'F_hat*sqrtP':>12} {'coercive':>9}")
    delta = cfg.delta0
    chosen = None
    while delta <= cfg.delta_cap * (1.0 + 1e-12):
        profile = make_pml(cfg.sigma, cfg.pml_exponent, delta, ctx.gamma_height)
        mc = modeling_constants(ctx, modes, profile)
        achieved = mc.f_hat * sqrt_period
        ok = profile.zeta.real >= 1.0 and achieved <= target
        tag = ""
        if ok and chosen is None:
            chosen = delta
            tag = "  <- selected"
        print(f"{delta:10.4g} {profile.zeta.real:10.4g} {mc.f:12.4e} "
              f"{mc.f_hat:12.4e} {achieved:12.4e} {str(mc.coercive):>9}{tag}")
        delta *= 2.0
    if chosen is None:
        print("no thickness in the grid meets the target")
        return 3
    print(f"zeta at delta = {chosen}: {compute_zeta(cfg.sigma, cfg.pml_exponent, chosen)}")
    return 0


def _cmd_mesh_info(cfg: RunConfig, args) -> int:
    ctx, _, geom, profile, constants = setup(cfg)
    mesh = generate_initial(geom, ctx, profile, cfg.h0)
    mesh.validate(geom)
    areas = mesh.areas()
    print(f"nodes:    {mesh.n_nodes}")
    print(f"elements: {mesh.n_tris} "
          f"(physical {int((mesh.region == 0).sum())}, "
          f"layer {int((mesh.region == 1).sum())})")
    print(f"area:     min {areas.min():.6g}, max {areas.max():.6g}, "
          f"total {areas.sum():.6g}")
    print(f"diameter: max {mesh.diameters().max():.6g}")
    print(f"layer:    delta = {profile.delta!r}, zeta = {profile.zeta!r}, "
          f"F_hat = {constants.f_hat:.4e}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "mesh_initial.vtk")
        write_vtk(mesh, path, cell_data={"region": mesh.region.astype(float)})
        print(f"wrote {path}")
    return 0


_DISPATCH = {
    "solve": _cmd_solve,
    "validate-flat": _cmd_validate_flat,
    "efficiency": _cmd_efficiency,
    "pml-calibrate": _cmd_pml_calibrate,
    "mesh-info": _cmd_mesh_info,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None and args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.command](cfg, args)
    except _NUMERICAL_ERRORS as exc:
        # checked first: ResonanceError is a ValueError but not a user error
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
