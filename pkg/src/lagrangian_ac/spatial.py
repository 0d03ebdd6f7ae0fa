"""Spatial discretizations of the flow map.

Two Galerkin spaces share one interface:

* :class:`FEMDisc` -- continuous piecewise-linear elements, 2-point Gauss
  per element for the nonlinear terms.
* :class:`SpectralDisc` -- Legendre-Galerkin with the compact basis
  ``phi_j = L_j - L_{j+2}``, Gauss-Lobatto quadrature.

A discretization exposes, at its *native* quadrature points ``xq`` (weights
``wq``), the matrices ``B`` (basis values) and ``D`` (basis derivatives) of the
boundary-vanishing basis, so that a flow map with coefficients ``u`` has

    x(xq) = xq + B @ u,     dx/dX(xq) = 1 + D @ u.

A second rule (``xr``, ``wr``, ``Br``, ``Dr``) carries the potential term.
For FEM it is a 6-point Gauss rule per element (dx/dX is constant on an
element, so positivity at the native points covers it); for the spectral
space it defaults to the native Gauss-Lobatto rule itself.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .core import Domain1D, FlowMapState
from .errors import ParameterError, ShapeError
from .newton import Tridiagonal


# ---------------------------------------------------------------------------
# Legendre polynomials and quadrature


def legendre_table(n: int, x):
    """Values and derivatives of L_0..L_n at ``x``; both of shape (n+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    L = np.zeros((n + 1, x.size))
    dL = np.zeros((n + 1, x.size))
    L[0] = 1.0
    if n >= 1:
        L[1] = x
        dL[1] = 1.0
    for k in range(1, n):
        L[k + 1] = ((2 * k + 1) * x * L[k] - k * L[k - 1]) / (k + 1)
        dL[k + 1] = dL[k - 1] + (2 * k + 1) * L[k]
    return L, dL


def legendre_eval(n: int, x, derivative: bool = False):
    """L_n(x) by the three-term recurrence (or L_n'(x) with ``derivative``)."""
    if n < 0:
        raise ParameterError("degree must be nonnegative")
    L, dL = legendre_table(n, x)
    out = dL[n] if derivative else L[n]
    return float(out[0]) if np.ndim(x) == 0 else out


def gauss_lobatto(N: int, tol: float = 1e-15, max_iter: int = 100):
    """Legendre-Gauss-Lobatto nodes and weights on [-1, 1].

    Returns N+1 ascending nodes including both endpoints; the rule is exact
    for polynomials of degree <= 2N-1.
    """
    if N < 2:
        raise ParameterError("Gauss-Lobatto rule needs N >= 2")
    # Newton on (1-x^2) L_N'(x) from Chebyshev-Lobatto guesses
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    for _ in range(max_iter):
        L, _ = legendre_table(N, x)
        dx = (x * L[N] - L[N - 1]) / ((N + 1) * L[N])
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    x[0], x[-1] = -1.0, 1.0
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    if N % 2 == 0:
        x[N // 2] = 0.0
    L, _ = legendre_table(N, x)
    w = 2.0 / (N * (N + 1) * L[N] ** 2)
    w = 0.5 * (w + w[::-1])
    return x, w


def spectral_synthesis(coeffs, points) -> np.ndarray:
    """Evaluate sum_n coeffs[n] L_n at ``points``."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ShapeError("coeffs must be a non-empty 1-D array")
    L, _ = legendre_table(c.size - 1, points)
    return c @ L


def spectral_analysis(values) -> np.ndarray:
    """Discrete Legendre transform of values sampled at the N+1 GL nodes."""
    f = np.asarray(values, dtype=float)
    if f.ndim != 1 or f.size < 3:
        raise ShapeError("need values at N+1 >= 3 Gauss-Lobatto nodes")
    N = f.size - 1
    x, w = gauss_lobatto(N)
    L, _ = legendre_table(N, x)
    gamma = 2.0 / (2.0 * np.arange(N + 1) + 1.0)
    gamma[N] = 2.0 / N  # discrete norm of L_N on the Lobatto grid
    return (L @ (w * f)) / gamma


def exponential_filter(coeffs, a: float | None = None, exponent: float = 1.0) -> np.ndarray:
    """Damp Legendre mode n by sigma(n/N) = exp(-a (n/N)**exponent).

    ``a`` defaults to -log(machine epsilon), so the top mode is scaled by
    machine epsilon. ``exponent=1`` is the plain exponential.
    """
    c = np.asarray(coeffs, dtype=float)
    if a is None:
        a = -np.log(np.finfo(float).eps)
    if a <= 0:
        raise ParameterError("filter strength a must be positive")
    N = c.size - 1
    if N < 1:
        return c.copy()
    eta = np.arange(N + 1) / N
    return np.exp(-a * eta ** exponent) * c


# ---------------------------------------------------------------------------
# Galerkin spaces for the flow map


class _Galerkin:
    """Shared plumbing; subclasses fill in the quadrature matrices."""

    domain: Domain1D
    ndof: int
    xq: np.ndarray
    wq: np.ndarray
    xr: np.ndarray
    wr: np.ndarray
    nodes: np.ndarray

    def check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.ndof,):
            raise ShapeError(f"expected {self.ndof} coefficients, got shape {u.shape}")
        return u

    def identity_state(self, time: float = 0.0) -> FlowMapState:
        return FlowMapState(np.zeros(self.ndof), time)

    def x_quad(self, u) -> np.ndarray:
        return self.xq + self.B @ self.check(u)

    def jacobian(self, u) -> np.ndarray:
        """dx/dX at the native quadrature points."""
        return 1.0 + self.D @ self.check(u)

    def jacobian_rich(self, u) -> np.ndarray:
        return 1.0 + self.Dr @ self.check(u)

    def x_rich(self, u) -> np.ndarray:
        return self.xr + self.Br @ self.check(u)

    def gram(self, M1, a, M2):
        """M1^T diag(a) M2."""
        return (M1.T * a) @ M2

    def min_jacobian(self, u) -> float:
        return float(min(self.jacobian(u).min(), self.jacobian_rich(u).min()))

    def positions(self, u) -> np.ndarray:
        """x at the Lagrangian nodes ``self.nodes``."""
        return self.evaluate(u, self.nodes)

    def evaluate(self, u, X) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


class FEMDisc(_Galerkin):
    """Piecewise-linear elements on strictly increasing ``nodes``.

    The unknowns are the interior nodal displacements x_i - X_i. With
    ``free_left`` the first node is an unknown as well (natural condition
    at the left end).
    """

    kind = "fem"

    def __init__(self, nodes, domain: Domain1D | None = None, rich_points: int = 6,
                 free_left: bool = False):
        X = np.asarray(nodes, dtype=float)
        if X.ndim != 1 or X.size < 3:
            raise ParameterError("FEM mesh needs at least 3 nodes")
        if np.any(np.diff(X) <= 0):
            raise ParameterError("FEM nodes must be strictly increasing")
        self.domain = domain or Domain1D(X[0], X[-1])
        if X[0] != self.domain.left or X[-1] != self.domain.right:
            raise ParameterError("first/last FEM node must equal the domain endpoints")
        X.setflags(write=False)
        self.nodes = X
        self.h = np.diff(X)
        self.n_elements = X.size - 1
        self.free_left = bool(free_left)
        self._first = 0 if self.free_left else 1
        self.ndof = X.size - 1 - self._first
        self.xq, self.wq, self.B, self.D = self._rule(*np.polynomial.legendre.leggauss(2))
        self.xr, self.wr, self.Br, self.Dr = self._rule(*np.polynomial.legendre.leggauss(rich_points))
        self.q_per_element = 2
        self._gram_index = {}

    def gram(self, M1, a, M2):
        """M1^T diag(a) M2 as a :class:`Tridiagonal`."""
        key = (id(M1), id(M2))
        if key not in self._gram_index:
            A1, A2 = M1.tocoo(), M2.tocoo()
            rows1 = {}
            for q, i, v in zip(A1.row, A1.col, A1.data):
                rows1.setdefault(q, []).append((i, v))
            q_idx, flat, coef = [], [], []
            n = self.ndof
            for q, j, v2 in zip(A2.row, A2.col, A2.data):
                for i, v1 in rows1.get(q, ()):
                    q_idx.append(q)
                    flat.append((j - i + 1) * n + j)
                    coef.append(v1 * v2)
            self._gram_index[key] = (np.array(q_idx), np.array(flat), np.array(coef))
        q_idx, flat, coef = self._gram_index[key]
        n = self.ndof
        data = np.bincount(flat, weights=coef * a[q_idx], minlength=3 * n).reshape(3, n)
        # dia rows are offsets (-1, 0, 1); solve_banded wants (1, 0, -1)
        return Tridiagonal(data[::-1])

    @classmethod
    def uniform(cls, n_elements: int, domain: Domain1D = Domain1D(),
                free_left: bool = False) -> "FEMDisc":
        if n_elements < 2:
            raise ParameterError("need at least 2 elements")
        return cls(np.linspace(domain.left, domain.right, n_elements + 1), domain,
                   free_left=free_left)

    @property
    def N(self) -> int:
        return self.n_elements

    def _rule(self, ref_x, ref_w):
        X, h, ne, nq, f = self.nodes, self.h, self.n_elements, ref_x.size, self._first
        t = 0.5 * (ref_x + 1.0)  # position inside element, 0..1
        xq = (X[:-1, None] + h[:, None] * t[None, :]).ravel()
        wq = (0.5 * h[:, None] * ref_w[None, :]).ravel()
        rows, cols, bv, dv = [], [], [], []
        for e in range(ne):
            for q in range(nq):
                r = e * nq + q
                # left node e, right node e+1; dof index = node - first
                if e >= f:
                    rows.append(r); cols.append(e - f)
                    bv.append(1.0 - t[q]); dv.append(-1.0 / h[e])
                if e + 1 <= ne - 1:
                    rows.append(r); cols.append(e + 1 - f)
                    bv.append(t[q]); dv.append(1.0 / h[e])
        shape = (ne * nq, self.ndof)
        B = sp.csr_matrix((bv, (rows, cols)), shape=shape)
        D = sp.csr_matrix((dv, (rows, cols)), shape=shape)
        return xq, wq, B, D

    def state_from_positions(self, x, time: float = 0.0) -> FlowMapState:
        x = np.asarray(x, dtype=float)
        if x.shape != self.nodes.shape:
            raise ShapeError(f"expected {self.nodes.size} nodal positions")
        if (x[0] != self.nodes[0] and not self.free_left) or x[-1] != self.nodes[-1]:
            raise ParameterError("flow map must be pinned at the domain endpoints")
        f = self._first
        return FlowMapState(x[f:-1] - self.nodes[f:-1], time)

    def positions(self, u) -> np.ndarray:
        u = self.check(u)
        x = self.nodes.copy()
        x[self._first:-1] += u
        return x

    def element_slopes(self, u) -> np.ndarray:
        return np.diff(self.positions(u)) / self.h

    def evaluate(self, u, X) -> np.ndarray:
        return np.interp(np.asarray(X, dtype=float), self.nodes, self.positions(u))

    def derivative(self, u, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        e = np.clip(np.searchsorted(self.nodes, X, side="right") - 1, 0, self.n_elements - 1)
        return self.element_slopes(u)[e]

    def invert(self, u, x) -> np.ndarray:
        """Exact inverse of the piecewise-linear map (map must be increasing)."""
        return np.interp(np.asarray(x, dtype=float), self.positions(u), self.nodes)


class SpectralDisc(_Galerkin):
    """Legendre-Galerkin space of degree N on ``domain``.

    x_h(X) = X + sum_{j=0}^{N-2} c_j phi_j(xi(X)) with phi_j = L_j - L_{j+2}
    and xi the affine map onto [-1, 1]. With ``free_left`` the lift
    (1 - xi)/2 is prepended as an extra first basis function, so the left
    end moves freely.
    """

    kind = "spectral"

    def __init__(self, N: int, domain: Domain1D = Domain1D(), rich_extra: int | None = None,
                 free_left: bool = False):
        if N < 2:
            raise ParameterError("spectral degree N must be >= 2")
        self.N = int(N)
        self.domain = domain
        self.free_left = bool(free_left)
        self.ndof = self.N - 1 + int(self.free_left)
        self._scale = 2.0 / domain.length  # d xi / dX
        xi, w = gauss_lobatto(self.N)
        self.xi_nodes = xi
        self.gl_weights = w
        self.nodes = self.to_X(xi)
        self.xq = self.nodes
        self.wq = w / self._scale
        self.B, self.D = self.basis(self.xq)
        if rich_extra is None:
            self.xr, self.wr, self.Br, self.Dr = self.xq, self.wq, self.B, self.D
        else:
            xg, wg = np.polynomial.legendre.leggauss(self.N + rich_extra)
            self.xr = self.to_X(xg)
            self.wr = wg / self._scale
            self.Br, self.Dr = self.basis(self.xr)

    def to_xi(self, X):
        return (2.0 * np.asarray(X, dtype=float) - self.domain.left - self.domain.right) / self.domain.length

    def to_X(self, xi):
        return self.domain.left + 0.5 * (np.asarray(xi, dtype=float) + 1.0) * self.domain.length

    def basis(self, X):
        """(values, X-derivatives) of the basis at X, shape (len(X), ndof)."""
        xi = np.atleast_1d(self.to_xi(X))
        L, dL = legendre_table(self.N, xi)
        phi = (L[:-2] - L[2:]).T
        dphi = (dL[:-2] - dL[2:]).T * self._scale
        if self.free_left:
            phi = np.column_stack([0.5 * (1.0 - xi), phi])
            dphi = np.column_stack([np.full(xi.size, -0.5 * self._scale), dphi])
        return phi, dphi

    def evaluate(self, u, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        phi, _ = self.basis(X.ravel())
        return (X.ravel() + phi @ self.check(u)).reshape(X.shape)

    def derivative(self, u, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        _, dphi = self.basis(X.ravel())
        return (1.0 + dphi @ self.check(u)).reshape(X.shape)

    def positions(self, u) -> np.ndarray:
        x = self.x_quad(u)
        if not self.free_left:
            x[0] = self.domain.left
        x[-1] = self.domain.right
        return x

    def state_from_positions(self, x, time: float = 0.0) -> FlowMapState:
        """Interpolate nodal positions at the GL nodes (endpoints must be pinned)."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.nodes.shape:
            raise ShapeError(f"expected {self.nodes.size} nodal positions")
        if (x[0] != self.nodes[0] and not self.free_left) or x[-1] != self.nodes[-1]:
            raise ParameterError("flow map must be pinned at the domain endpoints")
        f = 0 if self.free_left else 1
        c = np.linalg.solve(self.B[f:-1], x[f:-1] - self.nodes[f:-1])
        return FlowMapState(c, time)

    def invert(self, u, x, tol: float = 1e-13) -> np.ndarray:
        """Smallest X with x_h(X) = x, by bracketing and bisection.

        Positivity is only enforced at the quadrature points, so the
        polynomial map may fold between them. Brackets come from the running
        maximum of x_h on a fine label grid; for a monotone map this is the
        ordinary inverse.
        """
        u = self.check(u)
        xs = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        G = np.union1d(self.nodes, np.linspace(self.domain.left, self.domain.right, 16 * self.N + 1))
        xg = self.evaluate(u, G)
        xg[-1] = self.domain.right
        env = np.maximum.accumulate(xg)
        k = np.clip(np.searchsorted(env, xs, side="left"), 1, G.size - 1)
        lo, hi = G[k - 1].copy(), G[k].copy()
        out = np.empty_like(xs)
        hit = xg[k] == xs
        out[hit] = hi[hit]
        first = np.searchsorted(env, xs, side="left") == 0
        out[first] = G[0]
        todo = ~(hit | first)
        if np.any(todo):
            lo, hi, tgt = lo[todo], hi[todo], xs[todo]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                below = self.evaluate(u, mid) < tgt
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
                if np.max(hi - lo) <= tol:
                    break
            out[todo] = 0.5 * (lo + hi)
        return out.reshape(np.shape(x))


def make_disc(space: str, N: int, domain: Domain1D = Domain1D(), free_left: bool = False):
    """``N`` is the number of elements (fem) or the polynomial degree (spectral)."""
    space = space.lower()
    if space == "fem":
        return FEMDisc.uniform(N, domain, free_left=free_left)
    if space == "spectral":
        return SpectralDisc(N, domain, free_left=free_left)
    raise ParameterError(f"unknown space {space!r} (fem, spectral)")
