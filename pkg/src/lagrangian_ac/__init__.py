"""Lagrangian flow-map solvers for the one-dimensional Allen-Cahn equation."""

__version__ = "0.1.0"

from .core import Domain1D, EnergyReport, FlowMapState, InitialProfile, Potential, discrete_jacobian
from .errors import (ConfigError, DomainError, EulerianDivergenceError, FlowMapError, GeometryError,
                     JacobianPositivityError, NewtonConvergenceError, NoInterfaceError,
                     ParameterError, ShapeError, SingularTangentError, StartupError, StepFailure)
from .newton import IterationReport, NewtonConfig, damped_newton
from .spatial import FEMDisc, SpectralDisc, gauss_lobatto, make_disc
from .schemes import (TrajectorySolver, energy, energy_bdf2, jacobian_star, dissipation_audit,
                      residual_weak_bdf1, residual_weak_bdf2, step_bdf1, step_bdf2,
                      tangent_weak_bdf1, tangent_weak_bdf2)
from .reconstruction import (interface_metrics, invert_flow_map, max_principle_check, reconstruct,
                             spectral_profile, total_variation)
from .extensions import (AdvectionField, AxisymmetricSolver, axisym_solver, energy_axisym,
                         polar_disc, residual_advection_bdf1, step_advection_bdf1, step_axisym_bdf1)
from .eulerian import EulerianAllenCahn, run_to_time, step_eulerian_semi_implicit
from .harness import (EulerianConfig, ExperimentConfig, compare_methods, convergence_study,
                      run_experiment)
