import csv
import json

import numpy as np
import pytest

from lagrangian_ac import ConfigError, NewtonConvergenceError, StepFailure
from lagrangian_ac import harness
from lagrangian_ac.harness import (EulerianConfig, ExperimentConfig, compare_methods,
                                   convergence_study, integrate, run_experiment)
from lagrangian_ac.schemes import TrajectorySolver


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("bad", [dict(eps2=0.0), dict(dt=-1e-3), dict(N=1), dict(scheme="rk4"),
                                 dict(snapshot_times=(0.5,), t_end=0.1),
                                 dict(geometry="axisymmetric", scheme="bdf2")])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_config_file_parsing(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("scheme = bdf2\nn = 32\neps2 = 1e-3  # thin layer\nfilter = on\n"
                 "snapshot_times = 0.01, 0.02\nadvection-v = 1\n")
    cfg = ExperimentConfig.from_file(p)
    assert (cfg.scheme, cfg.N, cfg.eps2, cfg.filter, cfg.advection_v) == ("bdf2", 32, 1e-3, True, 1.0)
    assert cfg.snapshot_times == (0.01, 0.02)
    q = tmp_path / "b.cfg"
    q.write_text("[experiment]\nspace = fem\n")
    assert ExperimentConfig.from_file(q).space == "fem"
    (tmp_path / "c.cfg").write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "c.cfg")
    (tmp_path / "d.cfg").write_text("N = many\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "d.cfg")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "missing.cfg")


def test_zero_horizon_writes_identity_snapshot(tmp_path):
    cfg = ExperimentConfig(N=8, t_end=0.0, profile="parabola", output_dir=str(tmp_path))
    res = run_experiment(cfg)
    assert res.steps == 0 and len(res.snapshots) == 1
    rows = _rows(tmp_path / "snapshot_t0.csv")
    assert rows[0] == ["X", "x", "f"]
    X, x, f = np.array(rows[1:], dtype=float).T
    assert np.array_equal(X, x) and np.allclose(f, 1 - X ** 2)
    e = _rows(tmp_path / "energy.csv")
    assert e[0] == "step,t,E_total,E_grad,E_pot,E_aug,slack,newton_iters".split(",") and len(e) == 2


def test_outputs_are_byte_identical_across_runs(tmp_path):
    cfg = ExperimentConfig(N=16, dt=1e-3, t_end=0.01, snapshot_times=(0.005,), filter=True,
                           output_dir=str(tmp_path))
    run_experiment(cfg)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    run_experiment(cfg)
    assert "metadata.json" in first and "filtered_t0.005.csv" in first
    for name, data in first.items():
        if name != "metadata.json":
            assert (tmp_path / name).read_bytes() == data, name
    summary = json.loads(first["summary.json"])
    assert summary["status"] == "ok" and summary["energy_monotone"]


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path))
    cfg = ExperimentConfig(N=8, t_end=0.0)
    run_experiment(cfg)
    assert (tmp_path / cfg.run_name() / "summary.json").exists()


def test_parabola_run_records_interface_metrics():
    cfg = ExperimentConfig(scheme="bdf2", space="spectral", N=64, eps2=1e-3, dt=1e-4, t_end=0.1,
                           profile="parabola", snapshot_times=(0.01, 0.05, 0.1))
    res = integrate(cfg)
    assert res.violations == 0
    e = [r[2] for r in res.energy_rows]
    assert np.all(np.diff(e) <= 1e-10 * (1 + np.abs(e[:-1])))
    ts = [s.t for s in res.snapshots]
    assert ts == [0.0, 0.01, 0.05, 0.1]
    for s in res.snapshots:
        assert s.metrics["level"] == pytest.approx(0.5)
        assert s.metrics["crossings"] == 2


def test_coarse_fem_run_clusters_nodes_at_the_interface():
    cfg = ExperimentConfig(space="fem", N=8, eps2=1e-6, dt=1e-3, t_end=1.0, stop_at_steady=True)
    solver = cfg.make_solver()
    res = integrate(cfg, solver)
    assert res.steady
    x = solver.disc.positions(res.final_state.coeffs)[1:-1]
    assert np.all(np.abs(x) < 0.02)


def test_solver_failure_keeps_partial_outputs(tmp_path, monkeypatch):
    real = TrajectorySolver.step_bdf1
    calls = {"n": 0}

    def flaky(self, prev):
        calls["n"] += 1
        if calls["n"] == 3:
            raise NewtonConvergenceError("forced", None)
        return real(self, prev)

    monkeypatch.setattr(TrajectorySolver, "step_bdf1", flaky)
    cfg = ExperimentConfig(N=8, dt=1e-3, t_end=0.01, output_dir=str(tmp_path))
    with pytest.raises(StepFailure) as info:
        run_experiment(cfg)
    assert info.value.step == 3
    assert len(_rows(tmp_path / "energy.csv")) == 4  # header, initial row, steps 1 and 2
    assert json.loads((tmp_path / "summary.json").read_text())["status"] == "solver_failure"


def test_convergence_study_validation():
    base = ExperimentConfig(N=8, t_end=0.01)
    with pytest.raises(ConfigError):
        convergence_study(base, [1e-3, 5e-4], 1e-5)
    with pytest.raises(ConfigError):
        convergence_study(base, [1e-3, 5e-4, 1e-4], 1e-5)
    with pytest.raises(ConfigError):
        convergence_study(base, [1e-3, 5e-4, 2.5e-4], 1e-4)


def test_small_convergence_study(tmp_path):
    base = ExperimentConfig(scheme="bdf2", N=16, eps2=1e-2, t_end=0.02, output_dir=str(tmp_path))
    res = convergence_study(base, [2e-3, 1e-3, 5e-4], 5e-5)
    assert np.all(np.diff(res.errors) < 0)
    assert 1.6 < res.slope < 2.4
    assert _rows(tmp_path / "convergence.csv")[0] == ["dt", "error"]


def test_failed_member_run_saves_partial_table(tmp_path, monkeypatch):
    real = harness._final_positions
    calls = {"n": 0}

    def flaky(cfg):
        calls["n"] += 1
        if calls["n"] == 3:
            raise StepFailure(1, NewtonConvergenceError("forced", None))
        return real(cfg)

    monkeypatch.setattr(harness, "_final_positions", flaky)
    base = ExperimentConfig(N=8, eps2=1e-2, t_end=0.01, output_dir=str(tmp_path))
    with pytest.raises(StepFailure):
        convergence_study(base, [2e-3, 1e-3, 5e-4], 1e-4)
    assert len(_rows(tmp_path / "convergence.csv")) == 2


def test_comparing_a_method_with_itself_gives_zero():
    cfg = ExperimentConfig(N=16, eps2=1e-2, dt=1e-3, t_end=0.02)
    rows = compare_methods(cfg, cfg, [0.01, 0.02])
    assert all(r.location_offset == 0.0 and r.linf == 0.0 for r in rows)


def test_comparison_needs_matching_physics():
    with pytest.raises(ConfigError):
        compare_methods(ExperimentConfig(eps2=1e-2), ExperimentConfig(eps2=1e-3), [0.0])


def test_advected_interface_moves_forward_in_both_methods():
    lag = ExperimentConfig(space="spectral", N=64, eps2=1e-3, dt=1e-4, t_end=0.06, advection_v=1.0)
    rows = compare_methods(lag, EulerianConfig(N=256), [0.02, 0.04, 0.06])
    la = [r.location_a for r in rows]
    lb = [r.location_b for r in rows]
    assert np.all(np.diff(la) > 0) and np.all(np.diff(lb) > 0)
