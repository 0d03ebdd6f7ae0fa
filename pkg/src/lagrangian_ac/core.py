"""Problem data: domain, initial profile, free energy density, flow-map state.

Everything here is immutable. Arrays stored on a :class:`FlowMapState` are
marked read-only so a state can be shared between runs without copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ParameterError, ShapeError


@dataclass(frozen=True)
class Domain1D:
    left: float = -1.0
    right: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.left) and np.isfinite(self.right)):
            raise ParameterError("domain endpoints must be finite")
        if not self.left < self.right:
            raise ParameterError(f"need left < right, got ({self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left

    def contains(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X >= self.left) & (X <= self.right)


@dataclass(frozen=True)
class InitialProfile:
    """The datum f0 in Lagrangian coordinates, with its exact derivative.

    Use the named constructors (:meth:`linear`, :meth:`parabola`,
    :meth:`constant`, :meth:`custom`). ``value`` and ``derivative`` are
    vectorized callables.
    """

    kind: str
    value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    derivative: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    params: tuple = ()

    @classmethod
    def linear(cls, scale: float = 1.0) -> "InitialProfile":
        s = float(scale)
        return cls("linear", lambda X: s * np.asarray(X, dtype=float),
                   lambda X: np.full_like(np.asarray(X, dtype=float), s), (s,))

    @classmethod
    def parabola(cls) -> "InitialProfile":
        return cls("parabola", lambda X: 1.0 - np.asarray(X, dtype=float) ** 2,
                   lambda X: -2.0 * np.asarray(X, dtype=float))

    @classmethod
    def constant(cls, c: float) -> "InitialProfile":
        c = float(c)
        return cls("constant", lambda X: np.full_like(np.asarray(X, dtype=float), c),
                   lambda X: np.zeros_like(np.asarray(X, dtype=float)), (c,))

    @classmethod
    def custom(cls, value, derivative, name: str = "custom") -> "InitialProfile":
        """Closed-form profile. ``derivative`` must be the exact derivative."""
        return cls(name, lambda X: np.asarray(value(np.asarray(X, dtype=float)), dtype=float),
                   lambda X: np.asarray(derivative(np.asarray(X, dtype=float)), dtype=float))

    @classmethod
    def from_name(cls, name: str, **kw) -> "InitialProfile":
        name = name.lower()
        if name == "linear":
            return cls.linear(kw.get("scale", 1.0))
        if name == "parabola":
            return cls.parabola()
        if name == "constant":
            return cls.constant(kw.get("c", 1.0))
        raise ParameterError(f"unknown profile {name!r} (linear, parabola, constant)")

    def sup_abs(self, domain: Domain1D = Domain1D()) -> float:
        """max |f0| over the closed domain."""
        a, b = domain.left, domain.right
        if self.kind == "linear":
            return abs(self.params[0]) * max(abs(a), abs(b))
        if self.kind == "constant":
            return abs(self.params[0])
        if self.kind == "parabola":
            cand = [a, b] + ([0.0] if a < 0.0 < b else [])
            return float(np.max(np.abs(self.value(np.array(cand)))))
        X = np.linspace(a, b, 20001)
        vals = np.abs(self.value(X))
        k = int(np.argmax(vals))
        lo, hi = X[max(k - 1, 0)], X[min(k + 1, X.size - 1)]
        res = minimize_scalar(lambda s: -abs(float(self.value(np.array([s]))[0])),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14})
        return float(max(vals[k], -res.fun))


def profile_eval(profile: InitialProfile, X, domain: Domain1D = Domain1D()):
    """Return ``(f0(X), f0'(X))``; raises :class:`DomainError` outside the domain."""
    Xa = np.asarray(X, dtype=float)
    if not np.all(domain.contains(Xa)):
        raise DomainError(f"X={X!r} outside [{domain.left}, {domain.right}]")
    v, d = profile.value(Xa), profile.derivative(Xa)
    if Xa.ndim == 0:
        return float(v), float(d)
    return v, d


@dataclass(frozen=True)
class Potential:
    """Free energy density F and its derivative.

    ``variant`` is ``"double_well"`` (F = (s^2-1)^2 / (4 eps2)),
    ``"logarithmic"`` or ``"none"``.
    """

    variant: str = "double_well"
    eps2: Optional[float] = None
    theta: float = 1.0
    theta_c: float = 2.0

    def __post_init__(self):
        if self.variant not in ("double_well", "logarithmic", "none"):
            raise ParameterError(f"unknown potential variant {self.variant!r}")
        if self.variant == "double_well" and not (self.eps2 is not None and self.eps2 > 0):
            raise ParameterError("double-well potential needs eps2 > 0")
        if self.variant == "logarithmic" and not (self.theta > 0 and self.theta_c > 0):
            raise ParameterError("logarithmic potential needs theta, theta_c > 0")

    @classmethod
    def double_well(cls, eps2: float) -> "Potential":
        return cls("double_well", eps2=float(eps2))

    @classmethod
    def logarithmic(cls, theta: float = 1.0, theta_c: float = 2.0) -> "Potential":
        return cls("logarithmic", theta=float(theta), theta_c=float(theta_c))

    @classmethod
    def none(cls) -> "Potential":
        return cls("none")

    def _guard(self, s):
        if self.variant == "logarithmic" and np.any(np.abs(s) >= 1.0):
            raise DomainError("logarithmic potential is only defined for |s| < 1")

    def F(self, s):
        s = np.asarray(s, dtype=float)
        if self.variant == "double_well":
            return (s * s - 1.0) ** 2 / (4.0 * self.eps2)
        if self.variant == "logarithmic":
            self._guard(s)
            return (0.5 * self.theta * ((1 + s) * np.log1p(s) + (1 - s) * np.log1p(-s))
                    - 0.5 * self.theta_c * s * s)
        return np.zeros_like(s)

    def dF(self, s):
        s = np.asarray(s, dtype=float)
        if self.variant == "double_well":
            return s * (s * s - 1.0) / self.eps2
        if self.variant == "logarithmic":
            self._guard(s)
            return 0.5 * self.theta * (np.log1p(s) - np.log1p(-s)) - self.theta_c * s
        return np.zeros_like(s)


def potential_eval(potential: Potential, s):
    """Return ``(F(s), F'(s))``."""
    F, dF = potential.F(s), potential.dF(s)
    if np.ndim(s) == 0:
        return float(F), float(dF)
    return F, dF


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FlowMapState:
    """Discrete flow map x_h(X) = X + sum_j coeffs[j] psi_j(X).

    ``psi_j`` are the boundary-vanishing basis functions of the
    discretization the state belongs to (interior hat functions for FEM,
    L_j - L_{j+2} for the spectral space), so the map is pinned at both
    endpoints by construction. ``previous`` holds the prior time level for
    BDF2 (its own history is dropped).
    """

    coeffs: np.ndarray
    time: float = 0.0
    previous: Optional["FlowMapState"] = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))
        if self.coeffs.ndim != 1:
            raise ShapeError("coeffs must be a 1-D array")
        if self.time < 0:
            raise ParameterError("time must be nonnegative")
        if self.previous is not None and self.previous.previous is not None:
            object.__setattr__(self, "previous",
                               FlowMapState(self.previous.coeffs, self.previous.time))

    @property
    def size(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True)
class EnergyReport:
    total: float
    gradient_part: float
    potential_part: float
    bdf2_augmentation: float = 0.0
    dissipation_increment: float = 0.0


def discrete_jacobian(state: FlowMapState, disc) -> np.ndarray:
    """dx/dX at the native quadrature points of ``disc``."""
    if state.size != disc.ndof:
        raise ShapeError(f"state has {state.size} coefficients, disc expects {disc.ndof}")
    return disc.jacobian(state.coeffs)
