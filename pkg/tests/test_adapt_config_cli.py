"""Run configuration, the adaptive driver, reports, and the CLI."""

import csv
import math
import pathlib

import numpy as np
import pytest

from gratpml import (
    ConfigError,
    RunConfig,
    load_config,
    run,
    setup,
    write_config,
    write_convergence_csv,
    write_efficiency_csv,
    write_summary,
    write_vtk_series,
)
from gratpml.cli import main

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"

BASE = dict(
    omega=2.0 * math.pi,
    lam=1.0,
    mu=2.0,
    theta_deg=30.0,
    period=1.0,
    gamma_height=1.0,
)

MINIMAL_CFG = """\
[wave]
omega = 6.283185307179586
lambda = 1.0
mu = 2.0
theta_deg = 30.0
period = 1.0
gamma_height = 1.0
"""


def _quick_config(**overrides):
    kw = dict(BASE, h0=0.5, max_iters=2, tolerance=1e-12)
    kw.update(overrides)
    return RunConfig(**kw)


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------


def test_minimal_config_uses_documented_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, MINIMAL_CFG))
    assert cfg.omega == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert cfg.theta == pytest.approx(math.pi / 6.0, rel=1e-15)
    assert cfg.sigma == 12.0 + 12.0j
    assert cfg.grating == "flat"
    assert cfg.delta is None
    assert cfg.n_max == 20
    assert cfg.tau == 0.5
    assert cfg.max_dofs == 200_000
    assert cfg.corner is None
    assert cfg.jump_flux == "weighted"
    assert cfg.out_dir == "out"
    assert cfg.write_vtk is False


def test_config_roundtrips_through_write_and_load(tmp_path):
    cfg = RunConfig(
        **BASE,
        grating="sharp",
        sigma_re=10.0,
        sigma_im=6.0,
        pml_exponent=3,
        delta=2.0,
        n_max=12,
        tolerance=5e-4,
        tau=0.4,
        max_iters=7,
        max_dofs=12345,
        h0=0.125,
        amplitude=1.5,
        corner_x=0.5,
        corner_y=0.5,
        corner_radius=0.2,
        jump_flux="plain",
        quad_degree=7,
        out_dir="elsewhere",
        write_vtk=True,
    )
    path = tmp_path / "round.cfg"
    write_config(cfg, path)
    assert load_config(path) == cfg


def test_unknown_keys_are_rejected_by_name(tmp_path):
    path = _write(tmp_path, MINIMAL_CFG + "\n[adapt]\ntolrance = 1e-3\n")
    with pytest.raises(ConfigError, match="tolrance"):
        load_config(path)
    path2 = _write(tmp_path, MINIMAL_CFG + "\n[solver]\nkind = lu\n", "s.cfg")
    with pytest.raises(ConfigError, match="solver"):
        load_config(path2)


def test_grazing_incidence_is_rejected(tmp_path):
    text = MINIMAL_CFG.replace("theta_deg = 30.0", "theta_deg = 95.0")
    with pytest.raises(ConfigError, match="theta_deg"):
        load_config(_write(tmp_path, text))


def test_missing_required_keys_are_reported(tmp_path):
    text = MINIMAL_CFG.replace("mu = 2.0\n", "")
    with pytest.raises(ConfigError, match=r"\[wave\] mu"):
        load_config(_write(tmp_path, text))


def test_bad_literals_are_reported(tmp_path):
    text = MINIMAL_CFG.replace("omega = 6.283185307179586", "omega = fast")
    with pytest.raises(ConfigError, match="omega"):
        load_config(_write(tmp_path, text))
    bad_bool = MINIMAL_CFG + "\n[output]\nwrite_vtk = maybe\n"
    with pytest.raises(ConfigError, match="write_vtk"):
        load_config(_write(tmp_path, bad_bool, "b.cfg"))


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(_write(tmp_path, "omega = 1.0\n"))  # no section header


def test_validation_rejects_inconsistent_values():
    with pytest.raises(ConfigError, match="tau"):
        _quick_config(tau=0.0).validate()
    with pytest.raises(ConfigError, match="grating"):
        _quick_config(grating="wavy").validate()
    with pytest.raises(ConfigError, match="file"):
        _quick_config(grating="file").validate()
    with pytest.raises(ConfigError, match="corner"):
        _quick_config(corner_x=0.5).validate()
    with pytest.raises(ConfigError, match="delta"):
        _quick_config(delta=-1.0).validate()


def test_shipped_flat_config(tmp_path):
    cfg = load_config(CONFIG_DIR / "flat.cfg")
    assert cfg.grating == "flat"
    assert cfg.omega == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert (cfg.lam, cfg.mu, cfg.theta_deg) == (1.0, 2.0, 30.0)
    assert (cfg.period, cfg.gamma_height) == (1.0, 1.0)
    assert cfg.tolerance == 1e-4
    assert cfg.max_iters == 33
    assert cfg.h0 == 0.25
    assert cfg.out_dir == "out-flat"


def test_shipped_sharp_config(tmp_path):
    cfg = load_config(CONFIG_DIR / "sharp.cfg")
    assert cfg.grating == "sharp"
    assert cfg.max_iters == 30
    assert cfg.corner == (0.5, 0.5, 0.1)
    assert cfg.out_dir == "out-sharp"


# ---------------------------------------------------------------------------
# the adaptive driver
# ---------------------------------------------------------------------------


def test_setup_honours_fixed_and_calibrated_layers():
    fixed = _quick_config(delta=2.0)
    _, _, geom, profile, constants = setup(fixed)
    assert geom.is_flat_at_zero
    assert profile.delta == 2.0
    auto = _quick_config()
    _, _, _, profile_auto, constants_auto = setup(auto)
    assert profile_auto.delta == 8.0
    assert constants_auto.f_hat * math.sqrt(auto.period) <= 1e-8


def test_adaptive_run_is_deterministic():
    first = run(_quick_config(max_iters=3))
    second = run(_quick_config(max_iters=3))
    assert len(first.records) == len(second.records) == 3
    for a, b in zip(first.records, second.records):
        assert a.n_dofs == b.n_dofs
        assert a.eps_fem == b.eps_fem
        assert a.global_eta == b.global_eta
        assert a.energy_total == b.energy_total
        assert a.true_error == b.true_error
        assert np.array_equal(a.field_values, b.field_values)
    assert np.array_equal(first.final.mesh.nodes, second.final.mesh.nodes)


def test_records_grow_and_flat_run_tracks_true_error():
    result = run(_quick_config(max_iters=3))
    dofs = [r.n_dofs for r in result.records]
    assert dofs == sorted(dofs) and dofs[0] < dofs[-1]
    assert all(np.isfinite(r.true_error) and r.true_error > 0
               for r in result.records)
    assert all(np.isnan(r.corner_fraction) for r in result.records)
    assert result.stop_reason == "max_iterations"


def test_sharp_run_has_no_true_error_but_tracks_corner():
    cfg = _quick_config(
        grating="sharp", corner_x=0.5, corner_y=0.5, corner_radius=0.1
    )
    result = run(cfg)
    assert all(np.isnan(r.true_error) for r in result.records)
    assert all(0.0 < r.corner_fraction < 1.0 for r in result.records)


def test_stop_reasons():
    eased = run(_quick_config(tolerance=1e9))
    assert eased.stop_reason == "tolerance"
    assert len(eased.records) == 1

    blocked = run(_quick_config(max_dofs=50))
    assert blocked.stop_reason == "max_dofs"
    assert blocked.records == []
    with pytest.raises(RuntimeError):
        _ = blocked.final

    partial = run(_quick_config(max_iters=6, max_dofs=100))
    assert partial.stop_reason == "max_dofs"
    assert len(partial.records) >= 1
    assert partial.final.n_dofs <= 100


def test_progress_callback_sees_every_record():
    seen = []
    result = run(_quick_config(), progress=seen.append)
    assert [r.iteration for r in seen] == [r.iteration for r in result.records]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_run():
    return run(_quick_config())


def test_convergence_csv_roundtrips_exactly(tmp_path, small_run):
    path = tmp_path / "conv.csv"
    write_convergence_csv(small_run, path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [
        "iteration", "nodes", "elements", "dofs", "global_eta", "eps_fem",
        "eps_pml", "energy_total", "energy_defect", "true_error",
        "corner_fraction", "solve_residual", "wall_time",
    ]
    assert len(rows) == 1 + len(small_run.records)
    for row, rec in zip(rows[1:], small_run.records):
        assert int(row[0]) == rec.iteration
        assert int(row[3]) == rec.n_dofs
        assert float(row[5]) == rec.eps_fem  # .17g round-trips exactly
        assert float(row[7]) == rec.energy_total
        assert float(row[9]) == rec.true_error


def test_efficiency_csv_lists_propagating_modes(tmp_path, small_run):
    eff = small_run.final.efficiency
    path = tmp_path / "eff.csv"
    write_efficiency_csv(eff, path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["mode", "compressional", "shear"]
    assert rows[-1][0] == "total"
    assert float(rows[-1][1]) == eff.total
    body = {int(r[0]): (float(r[1]), float(r[2])) for r in rows[1:-1]}
    assert set(body) == {0}
    idx = int(np.nonzero(eff.n == 0)[0][0])
    assert body[0] == (eff.e1[idx], eff.e2[idx])


def test_summary_mentions_the_key_results(tmp_path, small_run):
    path = tmp_path / "summary.txt"
    write_summary(small_run, path)
    text = path.read_text(encoding="utf-8")
    assert "stop: max_iterations" in text
    assert "grating: flat" in text
    assert "eps_fem" in text
    assert "true H1 error" in text
    assert "coercive = True" in text


def test_vtk_series_writes_one_file_per_iteration(tmp_path, small_run):
    paths = write_vtk_series(small_run, tmp_path)
    assert len(paths) == len(small_run.records)
    for path, rec in zip(paths, small_run.records):
        text = open(path, encoding="utf-8").read()
        assert f"POINTS {rec.n_nodes}" in text
        assert "eta_hat" in text


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _cli_config(tmp_path, **overrides):
    cfg = _quick_config(**overrides)
    path = tmp_path / "cli.cfg"
    write_config(cfg, path)
    return path


def test_cli_solve_writes_reports(tmp_path, capsys):
    cfg = _cli_config(tmp_path)
    out = tmp_path / "results"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("convergence.csv", "efficiency.csv", "run_summary.txt"):
        assert (out / name).is_file()
    stdout = capsys.readouterr().out
    assert "iter  0" in stdout
    assert "stopped: max_iterations" in stdout


def test_cli_solve_quiet_and_optional_outputs(tmp_path, capsys):
    cfg = _cli_config(tmp_path, write_vtk=True, write_system=True, max_iters=1)
    out = tmp_path / "full"
    code = main(["solve", "--config", str(cfg), "--out", str(out), "--quiet"])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert (out / "mesh_000.vtk").is_file()
    assert (out / "system.mtx").is_file()


def test_cli_validate_flat_reports_a_slope(tmp_path, capsys):
    cfg = _cli_config(tmp_path, max_iters=3)
    out = tmp_path / "flatcheck"
    code = main(["validate-flat", "--config", str(cfg), "--out", str(out),
                 "--quiet"])
    assert code == 0
    assert "true-error slope" in capsys.readouterr().out


def test_cli_efficiency_prints_the_energy_balance(tmp_path, capsys):
    cfg = _cli_config(tmp_path)
    out = tmp_path / "eff"
    assert main(["efficiency", "--config", str(cfg), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "total =" in stdout
    assert (out / "efficiency.csv").is_file()


def test_cli_pml_calibrate_tabulates_and_selects(tmp_path, capsys):
    cfg = _cli_config(tmp_path)
    assert main(["pml-calibrate", "--config", str(cfg)]) == 0
    stdout = capsys.readouterr().out
    assert "<- selected" in stdout
    assert "zeta at delta = 8.0" in stdout


def test_cli_mesh_info(tmp_path, capsys):
    cfg = _cli_config(tmp_path)
    out = tmp_path / "mesh"
    assert main(["mesh-info", "--config", str(cfg), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "nodes:" in stdout
    assert (out / "mesh_initial.vtk").is_file()


def test_cli_exit_2_for_configuration_problems(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert "configuration error" in capsys.readouterr().err

    bad = _write(
        tmp_path,
        MINIMAL_CFG.replace("theta_deg = 30.0", "theta_deg = 95.0"),
        "bad.cfg",
    )
    assert main(["solve", "--config", str(bad)]) == 2
    assert "theta_deg" in capsys.readouterr().err


def test_cli_exit_3_for_numerical_failures(tmp_path, capsys):
    # kappa2 equals the first Bloch wavenumber: a genuine resonance, caught
    # after configuration parsing succeeded
    resonant = _quick_config(
        omega=2.0 * math.pi * math.sqrt(2.0), theta_deg=0.0
    )
    path = tmp_path / "resonant.cfg"
    write_config(resonant, path)
    assert main(["solve", "--config", str(path), "--quiet"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_help_and_usage_errors():
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
