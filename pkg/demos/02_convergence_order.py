"""Observed order of the two time steppers on a smooth problem.

Errors are measured on the flow-map nodes at t=0.1 against a fine BDF2
reference. Pass --full for the dt=1e-5 reference used by the acceptance
suite (about a minute); the default uses 5e-5.
"""

import sys

from lagrangian_ac import ExperimentConfig, convergence_study

reference = 1e-5 if "--full" in sys.argv else 5e-5
base = ExperimentConfig(space="spectral", N=64, eps2=1e-2, t_end=0.1, profile="linear")
for scheme in ("bdf1", "bdf2"):
    res = convergence_study(base.replace(scheme=scheme), [2e-3, 1e-3, 5e-4, 2.5e-4], reference)
    print(scheme)
    for dt, err in res.rows():
        print(f"  dt={dt:<8g} error={err:.3e}")
    print(f"  fitted slope {res.slope:.2f}")
