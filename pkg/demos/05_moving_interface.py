"""An interface carried by a constant advection speed v=1.

The Lagrangian rate becomes x_t - v. The crossing advances in both the
Lagrangian and the Eulerian solutions; the pinned ends slow it near the
outflow boundary.
"""

from lagrangian_ac import EulerianConfig, ExperimentConfig, compare_methods

lag = ExperimentConfig(space="spectral", N=64, eps2=1e-3, dt=1e-4, t_end=0.3, advection_v=1.0)
rows = compare_methods(lag, EulerianConfig(N=256), [0.05, 0.1, 0.2, 0.3])
for r in rows:
    print(f"t={r.t:.2f}: Lagrangian crossing {r.location_a:+.4f}, Eulerian {r.location_b:+.4f}")
