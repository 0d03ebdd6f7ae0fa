"""Damped Newton iteration with a positivity safeguard."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (JacobianPositivityError, NewtonConvergenceError, ParameterError,
                     SingularTangentError)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonConfig:
    """Settings for :func:`damped_newton`.

    damping
        Base step length alpha in (0, 1].
    stagnation_factor
        A residual within this factor of the tolerance is accepted when the
        undamped Newton correction is already at roundoff level.
    adaptive
        If true, alpha is doubled (up to 1) after every accepted iterate that
        did not increase the residual; a positivity failure halves it. If false the base
        alpha is used for every update and halving is undone afterwards.
    """

    damping: float = 1.0
    tol_residual: float = 1e-12
    max_iters: int = 200
    safeguard: bool = True
    adaptive: bool = False
    min_damping: float = 1e-12
    stagnation_factor: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError("damping must lie in (0, 1]")
        if self.tol_residual <= 0:
            raise ParameterError("tol_residual must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")

    @classmethod
    def for_eps2(cls, eps2: Optional[float], c: float = 1.0, **kw) -> "NewtonConfig":
        """alpha = min(1, c * eps2), growing back towards 1 once iterates behave."""
        alpha = 1.0 if eps2 is None else min(1.0, c * eps2)
        kw.setdefault("adaptive", True)
        return cls(damping=alpha, **kw)


@dataclass
class IterationReport:
    iterations: int = 0
    final_residual_norm: float = np.inf
    damping_used: float = 1.0
    converged: bool = False
    residual_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    stagnated: bool = False


class Tridiagonal:
    """Tridiagonal matrix in ``solve_banded`` layout: rows are (upper, main, lower)."""

    __slots__ = ("ab",)

    def __init__(self, ab):
        self.ab = np.asarray(ab, dtype=float)

    @property
    def shape(self):
        n = self.ab.shape[1]
        return (n, n)

    def __add__(self, other):
        return Tridiagonal(self.ab + other.ab)

    def __sub__(self, other):
        return Tridiagonal(self.ab - other.ab)

    def __neg__(self):
        return Tridiagonal(-self.ab)

    def __mul__(self, c):
        return Tridiagonal(self.ab * c)

    __rmul__ = __mul__

    def __matmul__(self, v):
        u, d, l = self.ab
        out = d * v
        out[:-1] += u[1:] * v[1:]
        out[1:] += l[:-1] * v[:-1]
        return out

    def toarray(self):
        u, d, l = self.ab
        return np.diag(d) + np.diag(u[1:], 1) + np.diag(l[:-1], -1)

    def solve(self, b):
        if np.any(self.ab[1] == 0.0) or not np.all(np.isfinite(self.ab)):
            raise np.linalg.LinAlgError("zero pivot or non-finite entry in tridiagonal tangent")
        return sla.solve_banded((1, 1), self.ab, b)


def _solve(A, b):
    """Direct solve; tridiagonal systems go through banded elimination."""
    if isinstance(A, Tridiagonal):
        return A.solve(b)
    if sp.issparse(A):
        A = sp.dia_matrix(A)
        n = A.shape[0]
        if set(A.offsets) <= {-1, 0, 1}:
            ab = np.zeros((3, n))
            for off, diag in zip(A.offsets, A.data):
                # dia storage is already aligned with solve_banded's layout
                ab[1 - off] = diag[:n]
            if np.any(ab[1] == 0.0):
                raise np.linalg.LinAlgError("zero pivot on tridiagonal tangent")
            return sla.solve_banded((1, 1), ab, b, check_finite=True)
        A = A.toarray()
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with warnings.catch_warnings():
        # an exactly singular factor is reported below as LinAlgError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=True)
    if np.any(np.diag(lu) == 0.0):
        raise np.linalg.LinAlgError("singular tangent")
    return sla.lu_solve((lu, piv), b)


def damped_newton(residual: Callable, tangent: Callable, start, cfg: NewtonConfig = NewtonConfig(),
                  guard: Optional[Callable] = None):
    """Solve ``residual(x) = 0`` by x <- x - alpha * tangent(x)^{-1} residual(x).

    ``guard(x)`` returns True for admissible iterates; a trial iterate that
    fails it is retried with alpha halved. Convergence is declared on the
    max-norm of the residual.

    Returns ``(x, IterationReport)``.
    """
    scalar = np.ndim(start) == 0
    x = np.atleast_1d(np.asarray(start, dtype=float)).copy()

    def R(z):
        return np.atleast_1d(np.asarray(residual(z[0] if scalar else z), dtype=float))

    def T(z):
        t = tangent(z[0] if scalar else z)
        if sp.issparse(t) or isinstance(t, Tridiagonal):
            return t
        return np.atleast_2d(np.asarray(t, dtype=float))

    def ok(z):
        return guard is None or bool(guard(z[0] if scalar else z))

    if cfg.safeguard and not ok(x):
        raise JacobianPositivityError("Newton start violates the positivity guard")

    rep = IterationReport(damping_used=cfg.damping)
    alpha = cfg.damping
    r = R(x)
    rnorm = float(np.max(np.abs(r)))
    rep.residual_history.append(rnorm)
    for k in range(cfg.max_iters + 1):
        if not np.isfinite(rnorm):
            break
        if rnorm <= cfg.tol_residual:
            rep.converged = True
            break
        if k == cfg.max_iters:
            break
        try:
            delta = _solve(T(x), r)
        except (np.linalg.LinAlgError, ValueError) as exc:
            rep.final_residual_norm = rnorm
            raise SingularTangentError(f"tangent factorization failed: {exc}", rep) from exc
        if not np.all(np.isfinite(delta)):
            rep.final_residual_norm = rnorm
            raise SingularTangentError("tangent solve produced non-finite update", rep)
        if (rnorm <= cfg.stagnation_factor * cfg.tol_residual
                and np.max(np.abs(delta)) <= 64 * np.finfo(float).eps * (1.0 + np.max(np.abs(x)))):
            # the full Newton correction is below roundoff: the residual sits at its floor
            rep.converged = rep.stagnated = True
            break
        a = alpha
        while True:
            trial = x - a * delta
            if not cfg.safeguard or ok(trial):
                break
            a *= 0.5
            if a < cfg.min_damping:
                rep.final_residual_norm = rnorm
                raise JacobianPositivityError(
                    f"positivity guard unsatisfiable at iteration {k} even with alpha={a:.1e}")
        x = trial
        r_new = R(x)
        rn_new = float(np.max(np.abs(r_new)))
        rep.step_history.append((a, float(np.max(np.abs(delta)))))
        if cfg.adaptive:
            # an update below roundoff says nothing about the residual trend
            tiny = a * np.max(np.abs(delta)) <= 1e-13 * (1.0 + np.max(np.abs(x)))
            grow = (rn_new <= rnorm * (1.0 + 1e-8) or tiny
                    or rn_new <= cfg.stagnation_factor * cfg.tol_residual)
            alpha = min(1.0, 2.0 * a) if grow else max(a, cfg.min_damping)
        rep.damping_used = min(rep.damping_used, a)
        r, rnorm = r_new, rn_new
        rep.residual_history.append(rnorm)
        rep.iterations = k + 1

    rep.final_residual_norm = rnorm
    if not rep.converged:
        raise NewtonConvergenceError(
            f"no convergence after {rep.iterations} iterations "
            f"(residual {rnorm:.3e} > {cfg.tol_residual:.1e})", rep)
    _check_degenerate(rep)
    log.debug("newton converged in %d iterations, residual %.2e", rep.iterations, rnorm)
    return (x[0] if scalar else x), rep


def _check_degenerate(rep: IterationReport):
    """Flag roots where full Newton steps only contract linearly.

    At a simple root undamped Newton steps shrink quadratically. If the last
    three full steps each shrink by a factor >= 0.4 the tangent is
    degenerate at the root and the residual tolerance was met only because
    the residual is flat there.
    """
    steps = rep.step_history
    if len(steps) < 4:
        return
    last = steps[-4:]
    if any(a != 1.0 for a, _ in last):
        return
    norms = [s for _, s in last]
    if all(n > 0 for n in norms[:-1]):
        ratios = [norms[i + 1] / norms[i] for i in range(3)]
        if all(q >= 0.4 for q in ratios):
            rep.converged = False
            raise SingularTangentError(
                "Newton converged only linearly (ratios "
                + ", ".join(f"{q:.2f}" for q in ratios)
                + "); tangent is singular at the root", rep)
