"""Advected and axisymmetric variants of the trajectory equation.

Advection with a constant speed v replaces the rate x_t by x_t - v; the
stepper is :class:`~lagrangian_ac.schemes.TrajectorySolver` with
``advection=v``.

In the axisymmetric case the radial map r(R, t) satisfies

    r_t f0' / r_R^n = -(1/r_R) d_R(f0'/r_R) - f0' / (r r_R) + F'(f0).

Multiplying by f0' r and integrating against a test function turns the
right-hand side into minus the variation of

    E(r) = int (1/2 (f0'/r_R)^2 + F(f0)) r r_R dR,

the planar energy written in the moving radial measure. The labels live on
(delta, h) with a small inner radius delta > 0. The outer end is pinned,
r(h) = h. The inner end carries no condition, so it moves with the natural
(free-edge) condition of E.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Domain1D, EnergyReport, FlowMapState, InitialProfile, Potential
from .errors import GeometryError, ParameterError
from .newton import damped_newton
from .schemes import TrajectorySolver, _solver
from .spatial import gauss_lobatto, make_disc


@dataclass(frozen=True)
class AdvectionField:
    v: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.v):
            raise ParameterError("advection speed must be finite")


def residual_advection_bdf1(candidate: FlowMapState, prev: FlowMapState, v, disc,
                            profile: InitialProfile, potential: Potential, dt: float) -> np.ndarray:
    """First-order weak residual with rate (x^{n+1} - x^n)/dt - v."""
    speed = v.v if isinstance(v, AdvectionField) else float(v)
    AdvectionField(speed)
    s = _solver(disc, profile, potential, dt, advection=speed)
    u, u0 = s._coeffs(candidate), s._coeffs(prev)
    s.require_positive(u0, "previous level")
    s.require_positive(u, "candidate")
    return s.residual(u, s.mass_weight(disc.jacobian(u0)), 1.0, disc.x_quad(u0))


def step_advection_bdf1(prev, v, disc, profile, potential, dt, newton=None):
    speed = v.v if isinstance(v, AdvectionField) else float(v)
    return _solver(disc, profile, potential, dt, newton=newton, advection=speed).step_bdf1(prev)


# ---------------------------------------------------------------------------
# axisymmetric


PolarState = FlowMapState
"""Radial map r(R) = R + sum c_j psi_j(R) on (0, h); same storage as the planar map."""


def polar_domain(h: float = 1.0, inner: float = 0.0) -> Domain1D:
    if not h > 0:
        raise ParameterError("outer radius h must be positive")
    if not 0.0 <= inner < h:
        raise ParameterError("inner radius must lie in [0, h)")
    return Domain1D(float(inner), float(h))


def inner_radius(space: str, N: int, h: float = 1.0) -> float:
    """First grid point after the origin of the degree-N (or N-element) grid on (0, h)."""
    if space == "fem":
        return h / N
    xi, _ = gauss_lobatto(N)
    return 0.5 * h * (1.0 + xi[1])


class AxisymmetricSolver(TrajectorySolver):
    """First-order stepper for the radial trajectory equation.

    ``disc`` lives on (delta, h) with delta >= 0. If ``disc.free_left`` the
    inner end is free; otherwise it is pinned (which with delta = 0 is the
    symmetry condition r(0) = 0). The rate term is weighted by
    f0'^2 r / r_R^n with r at the new level, so the weak form is minus the
    variation of the radial energy minus the rate pairing.
    """

    geometry = "axisymmetric"

    def __init__(self, disc, profile, potential, dt, scheme="bdf1", newton=None):
        if scheme != "bdf1":
            raise ParameterError("the axisymmetric stepper is first order only")
        if disc.domain.left < 0.0:
            raise ParameterError("radial labels must be nonnegative")
        super().__init__(disc, profile, potential, dt, "bdf1", newton)

    def _setup(self):
        self.load = None

    def _load(self, u):
        # minus the gradient of int F(f0) r r_R dR; on a free inner edge this
        # includes the boundary value F(f0(delta)) r(delta)
        d = self.disc
        return -(d.Br.T @ (d.wr * self.Fr * d.jacobian_rich(u)) + d.Dr.T @ (d.wr * self.Fr * d.x_rich(u)))

    def energy_parts(self, u):
        d = self.disc
        J = d.jacobian(u)
        grad = float(np.sum(d.wq * 0.5 * self.g2 * d.x_quad(u) / J))
        pot = float(np.sum(d.wr * self.Fr * d.x_rich(u) * d.jacobian_rich(u)))
        return grad, pot

    def mass_weight(self, Jref, u=None):
        w = self.g2 / Jref
        return w if u is None else w * self.disc.x_quad(u)

    def _grad_residual(self, u):
        d = self.disc
        J = d.jacobian(u)
        a = d.wq * 0.5 * self.g2 / J
        return -(d.B.T @ a) + d.D.T @ (a * d.x_quad(u) / J) + self._load(u)

    def _grad_tangent(self, u):
        d = self.disc
        J = d.jacobian(u)
        r = d.x_quad(u)
        c = d.wq * 0.5 * self.g2 / J ** 2
        T = d.gram(d.B, c, d.D) + d.gram(d.D, c, d.B) - d.gram(d.D, 2.0 * c * r / J, d.D)
        return T - d.gram(d.Br, d.wr * self.Fr, d.Dr) - d.gram(d.Dr, d.wr * self.Fr, d.Br)

    # ``mass_w`` here is f0'^2 / r_R^n; the factor r is applied at the candidate
    def residual(self, u, mass_w, beta, hist_q, v=None):
        d = self.disc
        r = d.x_quad(u)
        rate = (beta * r - hist_q) / self.dt
        return self._grad_residual(u) - d.B.T @ (d.wq * mass_w * r * rate)

    def tangent(self, u, mass_w, beta, hist_q):
        d = self.disc
        r = d.x_quad(u)
        rate = (beta * r - hist_q) / self.dt
        return self._grad_tangent(u) - d.gram(d.B, d.wq * mass_w * (rate + beta * r / self.dt), d.B)

    def force_scale(self, u, mass_w, beta, hist_q):
        d = self.disc
        J = d.jacobian(u)
        r = np.abs(d.x_quad(u))
        a = d.wq * 0.5 * self.g2 / J
        parts = [np.abs(d.B.T @ a), np.abs(d.D.T @ (a * r / J)),
                 np.abs(d.Br.T @ (d.wr * self.Fr * np.abs(d.jacobian_rich(u)))),
                 np.abs(d.Dr.T @ (d.wr * self.Fr * np.abs(d.x_rich(u)))),
                 np.abs(d.B.T @ (d.wq * mass_w * r * (beta * r + np.abs(hist_q)))) / self.dt]
        return float(1.0 + max(np.max(p) for p in parts))

    def _solve(self, start, mass_w, beta, hist_q, scale=None):
        s = self.force_scale(start, mass_w, beta, hist_q) if scale is None else scale
        return damped_newton(lambda z: self.residual(z, mass_w, beta, hist_q) / s,
                             lambda z: self.tangent(z, mass_w, beta, hist_q) * (1.0 / s),
                             start, self.newton, guard=self.admissible)

    def step_bdf1(self, prev):
        u0 = self._coeffs(prev)
        self.require_positive(u0, "previous level")
        d = self.disc
        u, rep = self._solve(u0.copy(), self.g2 / d.jacobian(u0), 1.0, d.x_quad(u0))
        self._post_check(u)
        return FlowMapState(u, prev.time + self.dt, previous=prev), rep

    def step_bdf2(self, prev, startup="bdf1"):
        raise ParameterError("the axisymmetric stepper is first order only")

    def _post_check(self, u):
        super()._post_check(u)
        d = self.disc
        r = d.positions(u)
        inner = r if d.domain.left > 0.0 else r[1:]
        if np.any(inner <= 0.0):
            raise GeometryError(f"radial map not positive away from the origin (min {inner.min():.3e})")

    def advection_work(self, u_new, u_old, mass_w):
        return 0.0


def polar_disc(space: str, N: int, h: float = 1.0):
    """Labels on (delta, h) with delta the first grid point after the origin; free inner end."""
    return make_disc(space, N, polar_domain(h, inner_radius(space, N, h)), free_left=True)


def axisym_solver(N: int, profile, potential, dt, h: float = 1.0, space: str = "spectral",
                  newton=None) -> AxisymmetricSolver:
    return AxisymmetricSolver(polar_disc(space, N, h), profile, potential, dt, newton=newton)


def step_axisym_bdf1(prev: PolarState, disc, profile, potential, dt, newton=None):
    """One radial first-order step; returns ``(state, IterationReport)``."""
    return AxisymmetricSolver(disc, profile, potential, dt, newton=newton).step_bdf1(prev)


def residual_axisym_bdf1(candidate, prev, disc, profile, potential, dt):
    s = AxisymmetricSolver(disc, profile, potential, dt)
    u, u0 = s._coeffs(candidate), s._coeffs(prev)
    return s.residual(u, s.g2 / disc.jacobian(u0), 1.0, disc.x_quad(u0))


def tangent_axisym_bdf1(candidate, prev, disc, profile, potential, dt):
    s = AxisymmetricSolver(disc, profile, potential, dt)
    u, u0 = s._coeffs(candidate), s._coeffs(prev)
    return s.tangent(u, s.g2 / disc.jacobian(u0), 1.0, disc.x_quad(u0))


def energy_axisym(state: PolarState, disc, profile, potential) -> EnergyReport:
    """int (1/2 (f0'/r_R)^2 + F(f0)) r r_R dR."""
    return AxisymmetricSolver(disc, profile, potential, 1.0).energy(state)
