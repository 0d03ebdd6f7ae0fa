"""Radial flow map for a radially symmetric layer, f0(R) = R on (delta, 1).

Labels start at the first grid point off the origin and the inner edge is
free. The energy in the measure r dr decays and r(1) = 1 stays pinned. The
level set f = 1/2 shrinks towards the origin; run longer and the inner
labels collapse, which ends the run with a solver error.
"""

from lagrangian_ac import ExperimentConfig, StepFailure
from lagrangian_ac.harness import integrate

for N in (16, 64):
    cfg = ExperimentConfig(geometry="axisymmetric", space="spectral", N=N, eps2=1e-3, dt=1e-4,
                           t_end=1e-3, snapshot_times=(5e-4,))
    solver = cfg.make_solver()
    res = integrate(cfg, solver)
    r = solver.disc.positions(res.final_state.coeffs)
    print(f"N={N}: energy {res.energy_rows[0][2]:.3f} -> {res.energy_rows[-1][2]:.3f}, "
          f"audit violations {res.violations}, r(delta)={r[0]:.4f}, r(1)={r[-1]}")
    for s in res.snapshots:
        print(f"  t={s.t:.4f} level-1/2 radius {s.metrics['location']:.4f}")

try:
    integrate(ExperimentConfig(geometry="axisymmetric", N=16, eps2=1e-3, dt=1e-4, t_end=5e-3))
except StepFailure as exc:
    print("longer run:", exc)
