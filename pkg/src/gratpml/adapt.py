"""The adaptive solve-estimate-mark-refine driver.

``run`` executes the full pipeline for one configuration: derive the wave
context and mode table, build (or calibrate) the absorbing layer, generate
the initial mesh, then iterate

    assemble -> solve -> estimate -> analyze modes -> mark -> bisect

until the discretization error measure eps_fem falls below the configured
tolerance, the iteration budget is exhausted, or the next solve would
exceed the dof budget.  Every iteration is retained as an IterationRecord
(with its mesh and nodal field), so reports and convergence studies can be
produced after the fact without re-running.

For a flat grating the exact solution is known in closed form and the true
H1-seminorm error is recorded alongside the estimate; for other profiles
that column is NaN.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble, build_dofmap
from .config import RunConfig
from .estimator import ErrorIndicators, indicators
from .exact import FlatSolution, flat_solution, h1_seminorm_error
from .meshing import (
    GratingProfile,
    Mesh,
    bisect,
    flat_profile,
    generate_initial,
    load_profile,
    locate_corner_fraction,
    mark,
    sharp_profile,
    write_vtk,
)
from .pml import ModelingConstants, PmlProfile, calibrate, make_pml, modeling_constants
from .rayleigh import EfficiencyReport, efficiencies, fourier_trace, recover_potentials
from .solver import SolveReport, solve_system
from .waves import ModeTable, WaveContext, build_mode_table, derive_context

__all__ = [
    "IterationRecord",
    "AdaptiveRun",
    "setup",
    "run",
    "write_convergence_csv",
    "write_efficiency_csv",
    "write_summary",
    "write_vtk_series",
]


@dataclass
class IterationRecord:
    """Everything measured on one mesh of the adaptive loop."""

    iteration: int
    n_nodes: int
    n_tris: int
    n_dofs: int
    global_eta: float
    eps_fem: float
    eps_pml: float
    energy_total: float
    energy_defect: float
    true_error: float
    corner_fraction: float
    wall_time: float
    solve: SolveReport
    efficiency: EfficiencyReport
    indicators: ErrorIndicators = field(repr=False)
    mesh: Mesh = field(repr=False)
    field_values: np.ndarray = field(repr=False)


@dataclass
class AdaptiveRun:
    """Result of one adaptive run: per-iteration records plus the setup."""

    config: RunConfig
    ctx: WaveContext
    modes: ModeTable
    geometry: GratingProfile
    profile: PmlProfile
    constants: ModelingConstants
    records: list[IterationRecord]
    stop_reason: str

    @property
    def final(self) -> IterationRecord:
        if not self.records:
            raise RuntimeError("run produced no iterations")
        return self.records[-1]


def setup(
    cfg: RunConfig,
) -> tuple[WaveContext, ModeTable, GratingProfile, PmlProfile, ModelingConstants]:
    """Derive context, modes, geometry and the absorbing layer of a config."""
    ctx = derive_context(
        omega=cfg.omega,
        lam=cfg.lam,
        mu=cfg.mu,
        theta=cfg.theta,
        period=cfg.period,
        gamma_height=cfg.gamma_height,
    )
    modes = build_mode_table(ctx, cfg.n_max, cfg.resonance_tol)
    if cfg.grating == "flat":
        geom = flat_profile(cfg.period)
    elif cfg.grating == "sharp":
        geom = sharp_profile(cfg.period)
    else:
        geom = load_profile(cfg.grating_file)
    if cfg.delta is not None:
        profile = make_pml(cfg.sigma, cfg.pml_exponent, cfg.delta, ctx.gamma_height)
    else:
        target = cfg.target_fhat if cfg.target_fhat is not None else 1e-8
        profile = calibrate(
            ctx,
            modes,
            sigma=cfg.sigma,
            m=cfg.pml_exponent,
            target=target,
            delta0=cfg.delta0,
            delta_cap=cfg.delta_cap,
        )
    constants = modeling_constants(ctx, modes, profile)
    return ctx, modes, geom, profile, constants


def run(cfg: RunConfig, progress=None) -> AdaptiveRun:
    """Execute the adaptive loop for one configuration.

    Parameters
    ----------
    cfg : RunConfig
    progress : callable, optional
        Called with each IterationRecord as it completes.

    Returns
    -------
    AdaptiveRun
        ``stop_reason`` is one of "tolerance", "max_iterations", "max_dofs".
    """
    ctx, modes, geom, profile, constants = setup(cfg)
    exact: FlatSolution | None = (
        flat_solution(ctx) if geom.is_flat_at_zero else None
    )
    corner = cfg.corner
    mesh = generate_initial(geom, ctx, profile, cfg.h0)
    weighted = cfg.jump_flux == "weighted"

    records: list[IterationRecord] = []
    stop_reason = "max_iterations"
    for it in range(cfg.max_iters):
        t0 = time.perf_counter()
        dofmap = build_dofmap(mesh, ctx, cfg.amplitude)
        if dofmap.n_free > cfg.max_dofs:
            stop_reason = "max_dofs"
            break
        system = assemble(
            mesh, ctx, profile, dofmap,
            quad_degree=cfg.quad_degree, amplitude=cfg.amplitude,
        )
        x, report = solve_system(system)
        values = dofmap.expand(x)
        ind = indicators(
            mesh, values, ctx, profile, constants.f_hat,
            weighted_jumps=weighted,
            amplitude=cfg.amplitude,
            quad_degree=cfg.quad_degree,
        )
        trace = fourier_trace(mesh, values, ctx, cfg.n_max, cfg.amplitude)
        eff = efficiencies(modes, recover_potentials(modes, trace), cfg.amplitude)
        true_error = (
            h1_seminorm_error(mesh, values, exact, cfg.amplitude, cfg.quad_degree)
            if exact is not None
            else float("nan")
        )
        fraction = (
            locate_corner_fraction(mesh, corner[:2], corner[2])
            if corner is not None
            else float("nan")
        )
        record = IterationRecord(
            iteration=it,
            n_nodes=mesh.n_nodes,
            n_tris=mesh.n_tris,
            n_dofs=dofmap.n_free,
            global_eta=ind.global_eta,
            eps_fem=ind.eps_fem,
            eps_pml=ind.eps_pml,
            energy_total=eff.total,
            energy_defect=abs(eff.total - 1.0),
            true_error=true_error,
            corner_fraction=fraction,
            wall_time=time.perf_counter() - t0,
            solve=report,
            efficiency=eff,
            indicators=ind,
            mesh=mesh,
            field_values=values,
        )
        records.append(record)
        if progress is not None:
            progress(record)
        if ind.eps_fem <= cfg.tolerance:
            stop_reason = "tolerance"
            break
        if it == cfg.max_iters - 1:
            break
        marked = mark(ind.eta_hat, cfg.tau)
        if marked.size == 0:
            stop_reason = "tolerance"
            break
        mesh = bisect(mesh, marked)

    return AdaptiveRun(
        config=cfg,
        ctx=ctx,
        modes=modes,
        geometry=geom,
        profile=profile,
        constants=constants,
        records=records,
        stop_reason=stop_reason,
    )


_CONVERGENCE_COLUMNS = [
    ("iteration", lambda r: r.iteration),
    ("nodes", lambda r: r.n_nodes),
    ("elements", lambda r: r.n_tris),
    ("dofs", lambda r: r.n_dofs),
    ("global_eta", lambda r: r.global_eta),
    ("eps_fem", lambda r: r.eps_fem),
    ("eps_pml", lambda r: r.eps_pml),
    ("energy_total", lambda r: r.energy_total),
    ("energy_defect", lambda r: r.energy_defect),
    ("true_error", lambda r: r.true_error),
    ("corner_fraction", lambda r: r.corner_fraction),
    ("solve_residual", lambda r: r.solve.residual),
    ("wall_time", lambda r: r.wall_time),
]


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_convergence_csv(run_result: AdaptiveRun, path) -> None:
    """One row per iteration with all scalar convergence measures."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in _CONVERGENCE_COLUMNS])
        for rec in run_result.records:
            writer.writerow([_fmt(get(rec)) for _, get in _CONVERGENCE_COLUMNS])


def write_efficiency_csv(report: EfficiencyReport, path) -> None:
    """Propagating-mode efficiencies of one solve, one row per mode."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "compressional", "shear"])
        for n, e1, e2 in zip(report.n, report.e1, report.e2):
            if np.isnan(e1) and np.isnan(e2):
                continue
            writer.writerow([int(n), _fmt(e1), _fmt(e2)])
        writer.writerow(["total", _fmt(report.total), ""])


def write_summary(run_result: AdaptiveRun, path) -> None:
    """Human-readable closing report of one adaptive run."""
    cfg = run_result.config
    ctx = run_result.ctx
    prof = run_result.profile
    mc = run_result.constants
    lines = [
        "adaptive grating solve",
        "=" * 60,
        f"omega = {ctx.omega!r}, lambda = {ctx.lam!r}, mu = {ctx.mu!r}",
        f"theta = {cfg.theta_deg!r} deg, period = {ctx.period!r}, "
        f"interface height = {ctx.gamma_height!r}",
        f"wavenumbers: kappa1 = {ctx.kappa1!r}, kappa2 = {ctx.kappa2!r}",
        f"grating: {cfg.grating}",
        f"layer: sigma = {prof.sigma!r}, m = {prof.m}, delta = {prof.delta!r}",
        f"       zeta = {prof.zeta!r}",
        f"       F = {mc.f!r}, F_hat = {mc.f_hat!r}, coercive = {mc.coercive}",
        f"modes: |n| <= {cfg.n_max}",
        "",
        f"iterations: {len(run_result.records)} (stop: {run_result.stop_reason})",
    ]
    if run_result.records:
        rec = run_result.final
        lines += [
            f"final mesh: {rec.n_nodes} nodes, {rec.n_tris} elements, "
            f"{rec.n_dofs} dofs",
            f"final eps_fem = {rec.eps_fem!r}",
            f"final eps_pml = {rec.eps_pml!r}",
            f"final energy total = {rec.energy_total!r} "
            f"(defect {rec.energy_defect!r})",
        ]
        if np.isfinite(rec.true_error):
            lines.append(f"final true H1 error = {rec.true_error!r}")
        lines += ["", "efficiencies (propagating modes):"]
        eff = rec.efficiency
        for n, e1, e2 in zip(eff.n, eff.e1, eff.e2):
            if np.isnan(e1) and np.isnan(e2):
                continue
            lines.append(f"  n = {int(n):+d}: compressional = {e1!r}, shear = {e2!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_vtk_series(run_result: AdaptiveRun, out_dir) -> list[str]:
    """Write mesh_NNN.vtk per iteration (solution and indicators attached)."""
    import os

    paths = []
    for rec in run_result.records:
        path = os.path.join(str(out_dir), f"mesh_{rec.iteration:03d}.vtk")
        write_vtk(
            rec.mesh,
            path,
            point_data={
                "u1": rec.field_values[:, 0],
                "u2": rec.field_values[:, 1],
            },
            cell_data={
                "eta_hat": rec.indicators.eta_hat,
                "region": rec.mesh.region.astype(float),
            },
        )
        paths.append(path)
    return paths
