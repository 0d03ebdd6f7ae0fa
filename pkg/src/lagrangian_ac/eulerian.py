"""Semi-implicit Eulerian Allen-Cahn solver used as a reference.

    f_t + v f_x = f_xx - F'(f),   f = f0 on the boundary.

The Laplacian is implicit; the potential and the (optional, constant)
advection term are explicit. Order 1 is
backward Euler; order 2 is BDF2 with F' evaluated at 2 f^n - f^{n-1}.
Space is either Legendre-Galerkin (compact basis L_k - L_{k+2} plus a
linear lift carrying the boundary values) or second-order finite
differences on a uniform grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .core import Domain1D, InitialProfile, Potential
from .errors import EulerianDivergenceError, ParameterError, ShapeError
from .spatial import gauss_lobatto, legendre_table

BLOWUP_FACTOR = 10.0


@dataclass
class Snapshot:
    t: float
    x: np.ndarray
    f: np.ndarray
    energy: float


class EulerianAllenCahn:
    """Fixed-step semi-implicit solver on ``domain``.

    Parameters
    ----------
    N : int
        Polynomial degree (spectral) or number of intervals (fd).
    potential : Potential
    dt : float
    order : {1, 2}
    method : {"spectral", "fd"}
    advection : float
        Constant transport speed v.
    """

    def __init__(self, N: int, potential: Potential, dt: float = 1e-4, order: int = 1,
                 method: str = "spectral", domain: Domain1D = Domain1D(), advection: float = 0.0):
        if order not in (1, 2):
            raise ParameterError("order must be 1 or 2")
        if not dt > 0:
            raise ParameterError("dt must be positive")
        if method not in ("spectral", "fd"):
            raise ParameterError("method must be 'spectral' or 'fd'")
        if N < 2:
            raise ParameterError("need N >= 2")
        self.N, self.potential, self.dt, self.order = int(N), potential, float(dt), order
        self.method, self.domain = method, domain
        self.advection = float(advection)
        self._half = 0.5 * domain.length
        if method == "spectral":
            self._setup_spectral()
        else:
            self._setup_fd()
        self._lu = {}

    # -- discretization ---------------------------------------------------

    def _to_x(self, xi):
        return self.domain.left + self._half * (np.asarray(xi, dtype=float) + 1.0)

    def _setup_spectral(self):
        N, half = self.N, self._half
        k = np.arange(N - 1, dtype=float)
        # mass and stiffness of phi_k = L_k - L_{k+2} on [-1, 1]
        M = np.diag(2.0 / (2 * k + 1) + 2.0 / (2 * k + 5))
        off = -2.0 / (2 * k[:-2] + 5)
        M += np.diag(off, 2) + np.diag(off, -2)
        self.M = half * M
        self.S = np.diag(4 * k + 6) / half
        xg, wg = np.polynomial.legendre.leggauss(N + N // 2 + 2)
        self._wq = half * wg
        L, dL = legendre_table(N, xg)
        self._phi_q = (L[:-2] - L[2:]).T
        self._dphi_q = (dL[:-2] - dL[2:]).T / half
        self._lift_q = 0.5 * (1.0 - xg), 0.5 * (1.0 + xg)
        xi, _ = gauss_lobatto(N)
        self.xi_nodes = xi
        self.x = self._to_x(xi)
        L = legendre_table(N, xi)[0]
        self._phi_nodes = (L[:-2] - L[2:]).T

    def _setup_fd(self):
        self.x = np.linspace(self.domain.left, self.domain.right, self.N + 1)
        self.h = self.domain.length / self.N

    def _system(self, c):
        key = c
        if key not in self._lu:
            if self.method == "spectral":
                self._lu[key] = sla.lu_factor(c * self.M / self.dt + self.S)
            else:
                n = self.N - 1
                ab = np.zeros((3, n))
                ab[0, 1:] = -1.0 / self.h ** 2
                ab[1] = c / self.dt + 2.0 / self.h ** 2
                ab[2, :-1] = -1.0 / self.h ** 2
                self._lu[key] = ab
        return self._lu[key]

    # -- representation -----------------------------------------------------

    def coeffs_from_nodes(self, f_nodes):
        """Spectral: (a, left, right) with f = lift + sum a_k phi_k interpolating f_nodes."""
        f = np.asarray(f_nodes, dtype=float)
        if f.shape != self.x.shape:
            raise ShapeError(f"expected {self.x.size} nodal values")
        lo, hi = f[0], f[-1]
        lift = lo * 0.5 * (1 - self.xi_nodes) + hi * 0.5 * (1 + self.xi_nodes)
        a = np.linalg.solve(self._phi_nodes[1:-1], (f - lift)[1:-1])
        return a, lo, hi

    def _field_at(self, a, lo, hi, xi):
        L = legendre_table(self.N, np.atleast_1d(xi))[0]
        return (L[:-2] - L[2:]).T @ a + lo * 0.5 * (1 - xi) + hi * 0.5 * (1 + xi)

    def values(self, a, lo, hi):
        return self._phi_nodes @ a + lo * 0.5 * (1 - self.xi_nodes) + hi * 0.5 * (1 + self.xi_nodes)

    def evaluate(self, f_nodes, x):
        """Field between nodes: polynomial (spectral) or linear (fd) interpolation."""
        x = np.asarray(x, dtype=float)
        if self.method == "fd":
            return np.interp(x, self.x, f_nodes)
        a, lo, hi = self.coeffs_from_nodes(f_nodes)
        xi = (2.0 * x - self.domain.left - self.domain.right) / self.domain.length
        return self._field_at(a, lo, hi, xi.ravel()).reshape(x.shape)

    # -- time stepping ------------------------------------------------------

    def _load(self, a, lo, hi):
        fq = self._phi_q @ a + lo * self._lift_q[0] + hi * self._lift_q[1]
        src = self.potential.dF(fq)
        if self.advection:
            src = src + self.advection * (self._dphi_q @ a + 0.5 * (hi - lo) / self._half)
        return self._phi_q.T @ (self._wq * src)

    def step(self, f_nodes, f_prev=None):
        """One step from nodal values; ``f_prev`` switches on the second-order formula."""
        f = np.asarray(f_nodes, dtype=float)
        second = self.order == 2 and f_prev is not None
        if self.method == "fd":
            return self._step_fd(f, None if not second else np.asarray(f_prev, dtype=float))
        a, lo, hi = self.coeffs_from_nodes(f)
        if second:
            ap, _, _ = self.coeffs_from_nodes(f_prev)
            rhs = self.M @ (4 * a - ap) / (2 * self.dt) - self._load(2 * a - ap, lo, hi)
            new = sla.lu_solve(self._system(1.5), rhs)
        else:
            rhs = self.M @ a / self.dt - self._load(a, lo, hi)
            new = sla.lu_solve(self._system(1.0), rhs)
        out = self.values(new, lo, hi)
        out[0], out[-1] = lo, hi
        return out

    def _step_fd(self, f, fp):
        lo, hi = f[0], f[-1]
        inner = f[1:-1]
        if fp is None:
            c, hist, ext = 1.0, inner / self.dt, inner
        else:
            c, hist, ext = 1.5, (4 * inner - fp[1:-1]) / (2 * self.dt), 2 * inner - fp[1:-1]
        rhs = hist - self.potential.dF(ext)
        if self.advection:
            g = f if fp is None else 2 * f - fp
            rhs -= self.advection * (g[2:] - g[:-2]) / (2 * self.h)
        rhs[0] += lo / self.h ** 2
        rhs[-1] += hi / self.h ** 2
        out = f.copy()
        out[1:-1] = sla.solve_banded((1, 1), self._system(c), rhs)
        return out

    def energy(self, f_nodes) -> float:
        """int 1/2 f_x^2 + F(f) dx."""
        f = np.asarray(f_nodes, dtype=float)
        if self.method == "fd":
            fx = np.diff(f) / self.h
            mid = 0.5 * (f[1:] + f[:-1])
            return float(np.sum(self.h * (0.5 * fx ** 2 + self.potential.F(mid))))
        a, lo, hi = self.coeffs_from_nodes(f)
        xg, wg = np.polynomial.legendre.leggauss(2 * self.N + 2)
        L, dL = legendre_table(self.N, xg)
        val = (L[:-2] - L[2:]).T @ a + lo * 0.5 * (1 - xg) + hi * 0.5 * (1 + xg)
        dval = ((dL[:-2] - dL[2:]).T @ a + 0.5 * (hi - lo)) / self._half
        return float(np.sum(self._half * wg * (0.5 * dval ** 2 + self.potential.F(val))))

    def run(self, f0_nodes, T: float, snapshot_times: Optional[Sequence[float]] = None,
            bound: Optional[float] = None):
        """March to ``T``; return snapshots at ``snapshot_times`` (always including 0 and T)."""
        if T < 0:
            raise ParameterError("T must be nonnegative")
        f = np.asarray(f0_nodes, dtype=float).copy()
        limit = BLOWUP_FACTOR * (np.max(np.abs(f)) if bound is None else bound)
        n_steps = int(round(T / self.dt))
        times = sorted(set([0.0] + [float(t) for t in (snapshot_times or [])] + [T]))
        if any(t < 0 or t > T + 1e-12 for t in times):
            raise ParameterError("snapshot times must lie in [0, T]")
        marks = {int(round(t / self.dt)): t for t in times}
        snaps = [Snapshot(0.0, self.x.copy(), f.copy(), self.energy(f))]
        prev = None
        for n in range(1, n_steps + 1):
            f, prev = self.step(f, prev), f
            if not np.all(np.isfinite(f)) or np.max(np.abs(f)) > limit:
                raise EulerianDivergenceError(
                    f"Eulerian solution exceeded {limit:.3g} at step {n} (t={n * self.dt:.4g})")
            if n in marks:
                snaps.append(Snapshot(marks[n], self.x.copy(), f.copy(), self.energy(f)))
        return snaps


def step_eulerian_semi_implicit(f, dt: float, eps2: float, order: int = 1, f_prev=None,
                                method: str = "spectral", domain: Domain1D = Domain1D(),
                                advection: float = 0.0):
    """One semi-implicit step for nodal values ``f`` (GL nodes or a uniform grid)."""
    f = np.asarray(f, dtype=float)
    solver = EulerianAllenCahn(f.size - 1, Potential.double_well(eps2), dt, order, method, domain,
                               advection)
    return solver.step(f, f_prev)


def run_to_time(f0, T: float, dt: float = 1e-4, eps2: float = 1e-3, N: int = 256,
                order: int = 2, method: str = "spectral", snapshot_times=None,
                potential: Optional[Potential] = None, domain: Domain1D = Domain1D(),
                advection: float = 0.0):
    """Solve from an :class:`InitialProfile` (or nodal values) and return snapshots."""
    pot = potential or Potential.double_well(eps2)
    solver = EulerianAllenCahn(N, pot, dt, order, method, domain, advection)
    if isinstance(f0, InitialProfile):
        start = f0.value(solver.x)
        bound = f0.sup_abs(domain)
    else:
        start = np.asarray(f0, dtype=float)
        bound = None
    return solver.run(start, T, snapshot_times, bound)
