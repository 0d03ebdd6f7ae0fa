"""Phase field from the flow map: f(x) = f0(X(x)), plus interface diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Domain1D, FlowMapState, InitialProfile
from .errors import DomainError, NoInterfaceError, ShapeError
from .spatial import (exponential_filter, gauss_lobatto, legendre_table,
                      spectral_analysis)

_BOUNDARY_TOL = 1e-14


def _coeffs(state, disc):
    u = state.coeffs if isinstance(state, FlowMapState) else np.asarray(state, dtype=float)
    if u.shape != (disc.ndof,):
        raise ShapeError(f"state has {np.size(u)} coefficients, disc expects {disc.ndof}")
    return u


def invert_flow_map(state, disc, x_query):
    """Lagrangian label X with x(X) = x_query.

    FEM maps are inverted exactly piece by piece; spectral maps by bisection
    between the images of neighbouring Gauss-Lobatto nodes.
    """
    u = _coeffs(state, disc)
    xq = np.asarray(x_query, dtype=float)
    a, b = disc.domain.left, disc.domain.right
    span = _BOUNDARY_TOL * (1.0 + max(abs(a), abs(b)))
    if np.any(xq < a - span) or np.any(xq > b + span):
        raise DomainError(f"query outside [{a}, {b}]")
    X = np.asarray(disc.invert(u, np.clip(xq, a, b)), dtype=float)
    X = np.where(xq <= a, a, np.where(xq >= b, b, X))
    return float(X) if X.ndim == 0 else X


def reconstruct(state, disc, profile: InitialProfile, queries):
    """Eulerian phase field at ``queries``: f0 composed with the inverse map."""
    X = invert_flow_map(state, disc, queries)
    f = profile.value(np.asarray(X, dtype=float))
    return float(f) if np.ndim(f) == 0 else f


@dataclass(frozen=True)
class MaxPrincipleReport:
    max_abs: float
    bound: float
    ok: bool


def max_principle_check(state, disc, profile: InitialProfile, samples: int = 1000,
                        domain: Domain1D | None = None) -> MaxPrincipleReport:
    """Compare max |f| on ``samples`` Eulerian points with max |f0|."""
    dom = domain or disc.domain
    x = np.linspace(dom.left, dom.right, samples)
    f = reconstruct(state, disc, profile, x)
    m = float(np.max(np.abs(f)))
    bound = profile.sup_abs(dom)
    return MaxPrincipleReport(m, bound, bool(m <= bound + 1e-12))


@dataclass(frozen=True)
class InterfaceMetrics:
    location: float
    width: float
    crossings: int


def _crossings(x, d):
    """Linearly interpolated zeros of the samples ``d`` on grid ``x``."""
    out = []
    for i in range(d.size - 1):
        a, b = d[i], d[i + 1]
        if a == 0.0:
            out.append(x[i])
        elif a * b < 0.0:
            out.append(x[i] - a * (x[i + 1] - x[i]) / (b - a))
    if d[-1] == 0.0:
        out.append(x[-1])
    # a sample exactly at the level is reported once
    return np.unique(np.asarray(out, dtype=float))


def _measure_below(x, d, thr):
    """Length of {|d| <= thr} for the piecewise-linear interpolant of d."""
    total = 0.0
    for i in range(d.size - 1):
        x0, x1, a, b = x[i], x[i + 1], d[i], d[i + 1]
        h = x1 - x0
        if a == b:
            total += h if abs(a) <= thr else 0.0
            continue
        # parameter interval where -thr <= a + (b-a) t <= thr
        t1, t2 = sorted(((-thr - a) / (b - a), (thr - a) / (b - a)))
        lo, hi = max(t1, 0.0), min(t2, 1.0)
        if hi > lo:
            total += (hi - lo) * h
    return total


def interface_metrics(f, x=None, level: float = 0.0, amplitude: float = 1.0,
                      fraction: float = 0.9) -> InterfaceMetrics:
    """First crossing of ``level`` and width of the transition layer.

    The width is the length of {|f - level| <= fraction * amplitude} for the
    piecewise-linear interpolant of the samples. The defaults fit profiles
    with phases +-1; for a profile between 0 and 1 use level=0.5,
    amplitude=0.5.
    """
    f = np.asarray(f, dtype=float)
    x = np.linspace(-1.0, 1.0, f.size) if x is None else np.asarray(x, dtype=float)
    if f.shape != x.shape or f.ndim != 1 or f.size < 2:
        raise ShapeError("f and x must be 1-D arrays of equal length >= 2")
    d = f - level
    zs = _crossings(x, d)
    if zs.size == 0:
        raise NoInterfaceError(f"samples never cross the level {level}")
    width = _measure_below(x, d, fraction * amplitude)
    return InterfaceMetrics(float(zs[0]), float(width), int(zs.size))


def interface_level(profile: InitialProfile, domain: Domain1D) -> tuple[float, float]:
    """(level, amplitude): midpoint and half-range of f0 over the domain."""
    X = np.linspace(domain.left, domain.right, 4001)
    v = profile.value(X)
    lo, hi = float(np.min(v)), float(np.max(v))
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


# ---------------------------------------------------------------------------
# spectral post-processing


@dataclass(frozen=True)
class SpectralProfile:
    """Degree-N Legendre representation of a reconstructed phase field."""

    coeffs: np.ndarray
    domain: Domain1D

    def __call__(self, x):
        xi = (2.0 * np.asarray(x, dtype=float) - self.domain.left - self.domain.right) / self.domain.length
        L, _ = legendre_table(self.coeffs.size - 1, np.atleast_1d(xi))
        out = self.coeffs @ L
        return out.reshape(np.shape(x))

    def filtered(self, a: float | None = None, exponent: float = 1.0) -> "SpectralProfile":
        return SpectralProfile(exponential_filter(self.coeffs, a, exponent), self.domain)


def spectral_profile(state, disc, profile: InitialProfile, N: int | None = None) -> SpectralProfile:
    """Legendre interpolant of the reconstructed field at N+1 Eulerian GL points."""
    N = disc.N if N is None else int(N)
    dom = disc.domain
    xi, _ = gauss_lobatto(N)
    x = dom.left + 0.5 * (xi + 1.0) * dom.length
    f = reconstruct(state, disc, profile, x)
    return SpectralProfile(spectral_analysis(f), dom)


def total_variation(values) -> float:
    return float(np.sum(np.abs(np.diff(np.asarray(values, dtype=float)))))
