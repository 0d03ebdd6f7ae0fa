"""Energy-stable BDF1/BDF2 steppers for the 1D trajectory equation.

The flow map x(X, t) solves

    x_t f0' / x_X = -d_X(f0' / x_X) / x_X + F'(f0),   x = X on the boundary,

and each time level is found from the Galerkin weak form: for all test
functions y vanishing on the boundary,

    (1/2 |f0'/x_X|^2, y') + (F'(f0), y f0') - (rate * f0'/x_ref, y f0') = 0,

with rate = (x^{n+1} - x^n)/dt and x_ref = x^n_X for BDF1, and
rate = (3x^{n+1} - 4x^n + x^{n-1})/(2dt) and x_ref = the extrapolated
Jacobian of :func:`jacobian_star` for BDF2. The first two terms are minus
the gradient of the discrete energy

    E(x) = int 1/2 (f0')^2 / x_X + F(f0) x_X dX,

so each step minimizes a convex functional and the energy never grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .core import EnergyReport, FlowMapState, InitialProfile, Potential
from .errors import (JacobianPositivityError, ParameterError, ShapeError, StartupError)
from .newton import IterationReport, NewtonConfig, damped_newton

AUDIT_RTOL = 1e-10


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "bdf1"
    dt: float = 1e-4
    newton: Optional[NewtonConfig] = None

    def __post_init__(self):
        if self.scheme not in ("bdf1", "bdf2"):
            raise ParameterError(f"scheme must be bdf1 or bdf2, got {self.scheme!r}")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")


def jacobian_star(dn, dnm1) -> np.ndarray:
    """Positivity-preserving second-order extrapolation of dx/dX.

    Linear extrapolation 2 dn - dnm1 where the Jacobian grows, the harmonic
    one 1 / (2/dn - 1/dnm1) where it shrinks. Both are positive for
    positive inputs.
    """
    dn = np.asarray(dn, dtype=float)
    dnm1 = np.asarray(dnm1, dtype=float)
    if np.any(dn <= 0) or np.any(dnm1 <= 0):
        raise ParameterError("jacobian_star needs strictly positive inputs")
    grow = dn >= dnm1
    # the masked-out branch may divide by ~0; only the selected one is kept
    with np.errstate(divide="ignore", over="ignore"):
        harmonic = 1.0 / (2.0 / dn - 1.0 / dnm1)
    out = np.where(grow, 2.0 * dn - dnm1, harmonic)
    return float(out) if out.ndim == 0 else out


def bdf2_identity_gap(a, b, c):
    """LHS minus RHS of 2(a-b)(3a-4b+c) = 5(a-b)^2 - (b-c)^2 + (a-2b+c)^2.

    This is the pointwise identity behind the second-order energy estimate;
    the gap is zero up to rounding.
    """
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    lhs = 2.0 * (a - b) * (3.0 * a - 4.0 * b + c)
    rhs = 5.0 * (a - b) ** 2 - (b - c) ** 2 + (a - 2.0 * b + c) ** 2
    return lhs - rhs


@dataclass(frozen=True)
class Audit:
    satisfied: bool
    slack: float


def dissipation_audit(e_prev: float, e_next: float, increment: float = 0.0,
                      allowance: float = 0.0) -> Audit:
    """Check E_next <= E_prev (+ allowance) within 1e-10 (1 + |E_prev|).

    ``increment`` is the dissipation term of the step; it is carried for
    reporting only. ``allowance`` admits energy input from a forcing term
    (e.g. the work done by an advection field).
    """
    tol = AUDIT_RTOL * (1.0 + abs(e_prev))
    return Audit(bool(e_next <= e_prev + allowance + tol), float(e_prev - e_next))


@dataclass
class StepRecord:
    step: int
    state: FlowMapState
    energy: EnergyReport
    audit: Optional[Audit]
    newton_iters: int
    min_jacobian: float
    displacement: float


class TrajectorySolver:
    """Galerkin trajectory-equation stepper on a fixed discretization.

    Parameters
    ----------
    disc : FEMDisc or SpectralDisc
    profile, potential
        Initial datum f0 and free energy density.
    dt : float
    scheme : {"bdf1", "bdf2"}
    newton : NewtonConfig, optional
        Defaults to ``NewtonConfig.for_eps2(potential.eps2)``.
    advection : float
        Constant advection speed v; the rate becomes x_t - v.
    """

    geometry = "cartesian"

    def __init__(self, disc, profile: InitialProfile, potential: Potential, dt: float,
                 scheme: str = "bdf1", newton: Optional[NewtonConfig] = None,
                 advection: float = 0.0):
        cfg = SchemeConfig(scheme, dt, newton)
        self.disc = disc
        self.profile = profile
        self.potential = potential
        self.dt = cfg.dt
        self.scheme = cfg.scheme
        self.newton = newton or NewtonConfig.for_eps2(potential.eps2)
        self.advection = float(advection)
        if not np.isfinite(self.advection):
            raise ParameterError("advection speed must be finite")
        g = profile.derivative(disc.xq)
        self.g2 = g * g
        self.Fr = potential.F(profile.value(disc.xr))
        self._setup()

    def _setup(self):
        d = self.disc
        # (F'(f0), y f0') = -(F(f0), y') for y vanishing at the ends; the
        # second form is the exact gradient of the discrete potential energy
        self.load = -(d.Dr.T @ (d.wr * self.Fr))

    # -- basic fields -----------------------------------------------------

    def _coeffs(self, state_or_u):
        u = state_or_u.coeffs if isinstance(state_or_u, FlowMapState) else state_or_u
        u = np.asarray(u, dtype=float)
        if u.shape != (self.disc.ndof,):
            raise ShapeError(f"expected {self.disc.ndof} coefficients, got {u.shape}")
        return u

    def admissible(self, u) -> bool:
        return self.disc.min_jacobian(u) > 0.0

    def require_positive(self, u, what="state"):
        m = self.disc.min_jacobian(u)
        if not m > 0.0:
            raise JacobianPositivityError(f"{what}: min dx/dX = {m:.3e} <= 0", m)

    # -- energy -----------------------------------------------------------

    def energy_parts(self, u):
        d = self.disc
        J = d.jacobian(u)
        grad = float(np.sum(d.wq * 0.5 * self.g2 / J))
        pot = float(np.sum(d.wr * self.Fr * d.jacobian_rich(u)))
        return grad, pot

    def energy(self, state) -> EnergyReport:
        u = self._coeffs(state)
        self.require_positive(u)
        grad, pot = self.energy_parts(u)
        return EnergyReport(grad + pot, grad, pot)

    def mass_weight(self, Jref, u=None):
        """Weight (f0')^2 / J_ref (times r in the radial case) of the rate term."""
        return self.g2 / Jref

    def augmentation(self, u_new, u_old, Jstar) -> float:
        d = self.disc
        dx = d.x_quad(u_new) - d.x_quad(u_old)
        return float(np.sum(d.wq * self.mass_weight(Jstar, u_new) * dx * dx)) / (4.0 * self.dt)

    def energy_bdf2(self, state_pair, star_field) -> EnergyReport:
        new, old = (self._coeffs(s) for s in state_pair)
        self.require_positive(new)
        grad, pot = self.energy_parts(new)
        aug = self.augmentation(new, old, np.asarray(star_field, dtype=float))
        return EnergyReport(grad + pot + aug, grad, pot, aug)

    # -- weak form --------------------------------------------------------

    def _grad_residual(self, u):
        d = self.disc
        J = d.jacobian(u)
        return d.D.T @ (d.wq * 0.5 * self.g2 / J ** 2) + self.load

    def _grad_tangent(self, u):
        d = self.disc
        J = d.jacobian(u)
        return d.gram(d.D, -d.wq * self.g2 / J ** 3, d.D)

    def residual(self, u, mass_w, beta, hist_q, v=None):
        """Weak residual for rate = (beta x - hist)/dt - v, weight mass_w."""
        d = self.disc
        v = self.advection if v is None else v
        rate = (beta * d.x_quad(u) - hist_q) / self.dt - v
        return self._grad_residual(u) - d.B.T @ (d.wq * mass_w * rate)

    def tangent(self, u, mass_w, beta):
        d = self.disc
        T = self._grad_tangent(u) - d.gram(d.B, d.wq * mass_w * beta / self.dt, d.B)
        return T

    def force_scale(self, u, mass_w, beta, hist_q) -> float:
        """Magnitude of the individual weak-form terms at ``u``.

        The residual is a difference of terms that grow like 1/eps^2, so
        Newton's tolerance is applied to the residual divided by this scale.
        """
        d = self.disc
        J = d.jacobian(u)
        grad = np.abs(d.D.T @ (d.wq * 0.5 * self.g2 / J ** 2))
        rate = np.abs(d.B.T @ (d.wq * mass_w * (beta * np.abs(d.x_quad(u)) + np.abs(hist_q)))) / self.dt
        return float(1.0 + np.max(np.abs(self.load)) + np.max(grad) + np.max(rate))

    def _solve(self, start, mass_w, beta, hist_q, scale=None):
        s = self.force_scale(start, mass_w, beta, hist_q) if scale is None else scale
        return damped_newton(lambda z: self.residual(z, mass_w, beta, hist_q) / s,
                             lambda z: self.tangent(z, mass_w, beta) * (1.0 / s),
                             start, self.newton, guard=self.admissible)

    # -- steps ------------------------------------------------------------

    def step_bdf1(self, prev: FlowMapState):
        u0 = self._coeffs(prev)
        self.require_positive(u0, "previous level")
        d = self.disc
        mass_w = self.mass_weight(d.jacobian(u0), u0)
        u, rep = self._solve(u0.copy(), mass_w, 1.0, d.x_quad(u0))
        self._post_check(u)
        return FlowMapState(u, prev.time + self.dt, previous=prev), rep

    def star(self, prev: FlowMapState):
        d = self.disc
        return jacobian_star(d.jacobian(prev.coeffs), d.jacobian(prev.previous.coeffs))

    def step_bdf2(self, prev: FlowMapState, startup: Optional[str] = "bdf1"):
        if prev.previous is None:
            if startup == "bdf1":
                return self.step_bdf1(prev)
            raise StartupError("BDF2 needs two history levels")
        d = self.disc
        un, unm1 = self._coeffs(prev), self._coeffs(prev.previous)
        self.require_positive(un, "previous level")
        self.require_positive(unm1, "level n-1")
        Jstar = self.star(prev)
        hist_q = 0.5 * (4.0 * d.x_quad(un) - d.x_quad(unm1))
        start = 2.0 * un - unm1
        if not self.admissible(start):
            start = un.copy()
        u, rep = self._solve_bdf2(start, Jstar, hist_q)
        self._post_check(u)
        return FlowMapState(u, prev.time + self.dt, previous=prev), rep

    def _solve_bdf2(self, start, Jstar, hist_q):
        return self._solve(start, self.mass_weight(Jstar), 1.5, hist_q)

    def _post_check(self, u):
        self.require_positive(u, "new level")

    def step(self, prev: FlowMapState):
        if self.scheme == "bdf2":
            return self.step_bdf2(prev)
        return self.step_bdf1(prev)

    # -- dissipation bookkeeping -------------------------------------------

    def dissipation(self, u_new, u_old, mass_w) -> float:
        d = self.disc
        dx = d.x_quad(u_new) - d.x_quad(u_old)
        return float(np.sum(d.wq * mass_w * dx * dx)) / self.dt

    def advection_work(self, u_new, u_old, mass_w) -> float:
        """v * (f0'^2/J_ref, x^{n+1} - x^n): energy injected by the advection term."""
        if self.advection == 0.0:
            return 0.0
        d = self.disc
        dx = d.x_quad(u_new) - d.x_quad(u_old)
        return float(self.advection * np.sum(d.wq * mass_w * dx))

    def march(self, state: FlowMapState, n_steps: int) -> Iterator[StepRecord]:
        """Advance ``n_steps`` and yield one audited record per step."""
        d = self.disc
        for k in range(1, n_steps + 1):
            prev = state
            up = prev.coeffs
            if self.scheme == "bdf2" and prev.previous is not None:
                Jstar = self.star(prev)
                state, rep = self.step_bdf2(prev)
                un = state.coeffs
                mass_w = self.mass_weight(Jstar, un)
                e_prev = self.energy_bdf2((prev, prev.previous), Jstar)
                e_new = self.energy_bdf2((state, prev), Jstar)
                incr = self.dissipation(un, up, mass_w)
            else:
                Jn = d.jacobian(up)
                state, rep = self.step_bdf1(prev)
                un = state.coeffs
                mass_w = self.mass_weight(Jn, un)
                e_prev = self.energy(prev)
                e_new = self.energy(state)
                incr = self.dissipation(un, up, mass_w)
            work = self.advection_work(un, up, mass_w)
            e_new = EnergyReport(e_new.total, e_new.gradient_part, e_new.potential_part,
                                 e_new.bdf2_augmentation, incr)
            audit = dissipation_audit(e_prev.total, e_new.total, incr, allowance=max(work, 0.0))
            disp = float(np.max(np.abs(d.positions(un) - d.positions(up))))
            yield StepRecord(k, state, e_new, audit, rep.iterations,
                             d.min_jacobian(un), disp)


# ---------------------------------------------------------------------------
# functional interface


def _solver(disc, profile, potential, dt=1.0, **kw):
    return TrajectorySolver(disc, profile, potential, dt, **kw)


def residual_weak_bdf1(candidate: FlowMapState, prev: FlowMapState, disc, profile, potential,
                       dt: float, advection: float = 0.0) -> np.ndarray:
    """Weak residual of the first-order scheme, one entry per test function."""
    s = _solver(disc, profile, potential, dt, advection=advection)
    u, u0 = s._coeffs(candidate), s._coeffs(prev)
    s.require_positive(u0, "previous level")
    s.require_positive(u, "candidate")
    return s.residual(u, s.mass_weight(disc.jacobian(u0)), 1.0, disc.x_quad(u0))


def tangent_weak_bdf1(candidate, prev, disc, profile, potential, dt, advection=0.0):
    """Derivative of :func:`residual_weak_bdf1` with respect to the coefficients."""
    s = _solver(disc, profile, potential, dt, advection=advection)
    u, u0 = s._coeffs(candidate), s._coeffs(prev)
    return s.tangent(u, s.mass_weight(disc.jacobian(u0)), 1.0)


def residual_weak_bdf2(candidate, prev, disc, profile, potential, dt):
    """Weak residual of the second-order scheme (``prev`` must carry history)."""
    if prev.previous is None:
        raise StartupError("BDF2 residual needs two history levels")
    s = _solver(disc, profile, potential, dt)
    u = s._coeffs(candidate)
    s.require_positive(u, "candidate")
    Jstar = s.star(prev)
    hist = 0.5 * (4.0 * disc.x_quad(prev.coeffs) - disc.x_quad(prev.previous.coeffs))
    return s.residual(u, s.mass_weight(Jstar), 1.5, hist)


def tangent_weak_bdf2(candidate, prev, disc, profile, potential, dt):
    s = _solver(disc, profile, potential, dt)
    return s.tangent(s._coeffs(candidate), s.mass_weight(s.star(prev)), 1.5)


def step_bdf1(prev, disc, profile, potential, dt, newton=None, advection=0.0):
    """One first-order step; returns ``(state, IterationReport)``."""
    return _solver(disc, profile, potential, dt, newton=newton, advection=advection).step_bdf1(prev)


def step_bdf2(prev, disc, profile, potential, dt, newton=None, startup="bdf1"):
    """One second-order step; the first step (no history) is taken with BDF1."""
    return _solver(disc, profile, potential, dt, scheme="bdf2", newton=newton).step_bdf2(prev, startup)


def energy(state, disc, profile, potential) -> EnergyReport:
    return _solver(disc, profile, potential).energy(state)


def energy_bdf2(state_pair, star_field, disc, profile, potential, dt) -> EnergyReport:
    return _solver(disc, profile, potential, dt).energy_bdf2(state_pair, star_field)
