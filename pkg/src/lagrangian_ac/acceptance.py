"""Built-in acceptance suite.

Each check returns a :class:`CheckResult`. Checks 2-4 are aggregate
properties over every run produced by the other checks, so they read a
shared :class:`RunLog` and must run last.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import FlowMapState, InitialProfile, Potential
from .extensions import (polar_disc, residual_advection_bdf1,
                         residual_axisym_bdf1, tangent_axisym_bdf1)
from .harness import (EulerianConfig, ExperimentConfig, RunResult, compare_methods,
                      convergence_study, integrate)
from .reconstruction import spectral_profile, total_variation
from .schemes import (bdf2_identity_gap, jacobian_star, residual_weak_bdf1, residual_weak_bdf2,
                      tangent_weak_bdf1, tangent_weak_bdf2)
from .spatial import make_disc


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


@dataclass
class RunLog:
    runs: list = field(default_factory=list)

    def add(self, r: RunResult) -> RunResult:
        self.runs.append(r)
        return r


# ---------------------------------------------------------------------------


def check_temporal_order(log: RunLog) -> CheckResult:
    base = ExperimentConfig(space="spectral", N=64, eps2=1e-2, t_end=0.1, profile="linear")
    dts = [2e-3, 1e-3, 5e-4, 2.5e-4]
    slopes, ok = {}, True
    for scheme, (lo, hi) in (("bdf1", (0.75, 1.25)), ("bdf2", (1.7, 2.3))):
        res = convergence_study(base.replace(scheme=scheme), dts, 1e-5, runs=log.runs)
        slopes[scheme] = res.slope
        ok &= lo <= res.slope <= hi and all(np.diff(res.errors) < 0)
    return CheckResult(1, "temporal order", ok,
                       f"bdf1 slope {slopes['bdf1']:.3f} in [0.75,1.25], "
                       f"bdf2 slope {slopes['bdf2']:.3f} in [1.7,2.3]")


def _no_runs(n, name):
    return CheckResult(n, name, False, "no runs recorded; run it together with checks 1 and 5-10")


def check_energy_law(log: RunLog) -> CheckResult:
    if not log.runs:
        return _no_runs(2, "discrete energy law")
    bad = sum(r.violations for r in log.runs)
    steps = sum(r.steps for r in log.runs)
    return CheckResult(2, "discrete energy law", bad == 0 and steps > 0,
                       f"{bad} audit violations over {steps} steps in {len(log.runs)} runs")


def check_jacobian(log: RunLog) -> CheckResult:
    if not log.runs:
        return _no_runs(3, "jacobian positivity")
    m = min((r.min_jacobian for r in log.runs), default=np.nan)
    return CheckResult(3, "jacobian positivity", bool(m > 0), f"min dx/dX over all runs {m:.3e}")


def check_max_principle(log: RunLog) -> CheckResult:
    if not log.runs:
        return _no_runs(4, "maximum principle")
    snaps = [s for r in log.runs for s in r.snapshots]
    bad = [s for s in snaps if not s.max_principle["ok"]]
    worst = max((s.max_principle["max_abs"] - s.max_principle["bound"] for s in snaps), default=np.nan)
    return CheckResult(4, "maximum principle", not bad and bool(snaps),
                       f"{len(bad)} of {len(snaps)} snapshots exceed max|f0|; "
                       f"worst max|f|-max|f0| = {worst:.2e}")


def check_eps_independence(log: RunLog) -> CheckResult:
    fails = []
    for eps2 in (1e-3, 1e-4, 1e-5, 1e-6):
        for N in (8, 16, 32, 64):
            cfg = ExperimentConfig(space="fem", N=N, eps2=eps2, dt=1e-3, t_end=5.0,
                                   profile="linear", stop_at_steady=True)
            solver = cfg.make_solver()
            r = log.add(integrate(cfg, solver))
            x = solver.disc.positions(r.final_state.coeffs)[1:-1]
            frac = float(np.mean(np.abs(x) <= 10 * np.sqrt(eps2)))
            m = r.snapshots[-1].metrics
            loc = np.inf if m is None else abs(m["location"])
            if not (r.steady and loc <= 2.0 / N and frac >= 0.5):
                fails.append(f"eps2={eps2:g},N={N}: steady={r.steady} |x0|={loc:.2e} frac={frac:.2f}")
    return CheckResult(5, "resolution independent of eps", not fails,
                       "16 runs steady, crossing within 2/N, >= half the nodes in the layer"
                       if not fails else "; ".join(fails))


def check_eulerian_agreement(log: RunLog) -> CheckResult:
    lag = ExperimentConfig(scheme="bdf2", space="spectral", N=64, eps2=1e-3, dt=1e-4,
                           t_end=0.1, profile="parabola")
    rows = compare_methods(lag, EulerianConfig(N=256, dt=1e-4, order=2), [0.01, 0.05, 0.1],
                           runs=log.runs)
    tol = 5 * np.sqrt(lag.eps2)
    ok = all(r.location_offset < tol and r.linf_outside_band < 0.05 for r in rows)
    detail = ", ".join(f"t={r.t:g}: offset {r.location_offset:.2e} outside-band {r.linf_outside_band:.2e}"
                       for r in rows)
    return CheckResult(6, "agreement with Eulerian reference", ok, detail)


def check_filter(log: RunLog) -> CheckResult:
    ok, parts = True, []
    for eps2 in (1e-3, 1e-5):
        cfg = ExperimentConfig(space="spectral", N=16, eps2=eps2, dt=1e-3, t_end=5.0,
                               profile="linear", stop_at_steady=True)
        solver = cfg.make_solver()
        r = log.add(integrate(cfg, solver, record=False))
        sp = spectral_profile(r.final_state, solver.disc, solver.profile)
        xs = np.linspace(-1.0, 1.0, 4001)
        raw, filt = sp(xs), sp.filtered()(xs)
        tv_r, tv_f = total_variation(raw), total_variation(filt)
        ov_r, ov_f = np.max(np.abs(raw)) - 1.0, np.max(np.abs(filt)) - 1.0
        ok &= r.steady and tv_f <= tv_r and ov_f <= ov_r
        parts.append(f"eps2={eps2:g}: TV {tv_f:.3f}<={tv_r:.3f}, overshoot {ov_f:.2e}<={ov_r:.2e}")
    return CheckResult(7, "filter efficacy", bool(ok), "; ".join(parts))


def check_axisymmetric(log: RunLog) -> CheckResult:
    ok, parts = True, []
    for N in (16, 64):
        cfg = ExperimentConfig(geometry="axisymmetric", space="spectral", N=N, eps2=1e-3,
                               dt=1e-4, t_end=1e-3, profile="linear", h=1.0)
        solver = cfg.make_solver()
        r = log.add(integrate(cfg, solver))
        e = [row[2] for row in r.energy_rows]
        outer = solver.disc.positions(r.final_state.coeffs)[-1]
        ok &= r.violations == 0 and outer == 1.0 and r.min_jacobian > 0 and r.steps == 10
        parts.append(f"N={N}: E {e[0]:.3f}->{e[-1]:.3f}, violations {r.violations}, "
                     f"r(h)-h={outer - 1.0:.1e}, min J {r.min_jacobian:.2e}")
    return CheckResult(8, "axisymmetric run", bool(ok), "; ".join(parts))


# ---------------------------------------------------------------------------
# solver properties


def random_admissible(disc, rng, scale=0.3, floor=0.2):
    """Random coefficients whose map has dx/dX >= floor at the quadrature points."""
    while True:
        u = scale * rng.uniform(-1, 1, disc.ndof)
        if hasattr(disc, "element_slopes"):  # nodal displacements
            u *= disc.domain.length / (disc.nodes.size - 1)
        else:  # modal coefficients
            u /= (1.0 + np.arange(disc.ndof)) ** 2
        if disc.min_jacobian(u) >= floor:
            return u
        scale *= 0.5


def directional_error(res: Callable, tan: Callable, u, d, h=1e-7) -> float:
    """Relative mismatch between tan(u) d and a central difference of res along d."""
    fd = (res(u + h * d) - res(u - h * d)) / (2 * h)
    Td = tan(u) @ d
    return float(np.linalg.norm(fd - Td) / max(np.linalg.norm(Td), 1e-300))


def tangent_cases(space: str, N: int, rng, eps2=1e-2, dt=1e-3):
    """Yield (label, residual(u), tangent(u), u, d) at one random history per call."""
    prof, pot = InitialProfile.linear(), Potential.double_well(eps2)
    disc = make_disc(space, N)
    u0, u1, u = (random_admissible(disc, rng) for _ in range(3))
    prev1 = FlowMapState(u0, 0.0)
    prev2 = FlowMapState(u1, dt, previous=prev1)
    S = lambda z: FlowMapState(z, 2 * dt)
    d = rng.standard_normal(disc.ndof)
    d /= np.max(np.abs(d))
    yield (f"bdf1/{space}", lambda z: residual_weak_bdf1(S(z), prev1, disc, prof, pot, dt),
           lambda z: tangent_weak_bdf1(S(z), prev1, disc, prof, pot, dt), u, d)
    yield (f"bdf2/{space}", lambda z: residual_weak_bdf2(S(z), prev2, disc, prof, pot, dt),
           lambda z: tangent_weak_bdf2(S(z), prev2, disc, prof, pot, dt), u, d)
    yield (f"advection/{space}",
           lambda z: residual_advection_bdf1(S(z), prev1, 0.7, disc, prof, pot, dt),
           lambda z: tangent_weak_bdf1(S(z), prev1, disc, prof, pot, dt, advection=0.7), u, d)
    pd = polar_disc(space, N)
    a0, a = random_admissible(pd, rng), random_admissible(pd, rng)
    q = FlowMapState(a0, 0.0)
    e = rng.standard_normal(pd.ndof)
    e /= np.max(np.abs(e))
    yield (f"axisymmetric/{space}", lambda z: residual_axisym_bdf1(S(z), q, pd, prof, pot, dt),
           lambda z: tangent_axisym_bdf1(S(z), q, pd, prof, pot, dt), a, e)


def check_solver_properties(log: RunLog, seed: int = 20240601) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(20):
        for space in ("fem", "spectral"):
            for label, res, tan, u, d in tangent_cases(space, 16, rng):
                worst[label] = max(worst.get(label, 0.0), directional_error(res, tan, u, d))
    tan_ok = max(worst.values()) <= 1e-5
    a, b, c = rng.uniform(-10, 10, (3, 1000))
    gap = float(np.max(np.abs(bdf2_identity_gap(a, b, c))))
    id_ok = gap <= 1e-12 * (1.0 + float(np.max(np.abs(np.stack([a, b, c]))) ** 2))
    p, q = np.exp(rng.uniform(-12, 12, (2, 1000)))
    js = jacobian_star(p, q)
    js_ok = bool(np.all(np.isfinite(js)) and np.all(js > 0))
    worst_label = max(worst, key=worst.get)
    return CheckResult(9, "solver properties", bool(tan_ok and id_ok and js_ok),
                       f"tangent vs FD worst {worst[worst_label]:.1e} ({worst_label}); "
                       f"BDF2 identity gap {gap:.1e}; jacobian_star min {np.min(js):.1e}")


def check_oracle_reductions(log: RunLog, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    prof, pot = InitialProfile.linear(), Potential.double_well(1e-2)
    same = True
    for space in ("fem", "spectral"):
        disc = make_disc(space, 16)
        for _ in range(20):
            c = FlowMapState(random_admissible(disc, rng), 1e-3)
            p = FlowMapState(random_admissible(disc, rng), 0.0)
            same &= np.array_equal(residual_advection_bdf1(c, p, 0.0, disc, prof, pot, 1e-3),
                                   residual_weak_bdf1(c, p, disc, prof, pot, 1e-3))
    drift = 0.0
    for space in ("fem", "spectral"):
        for scheme in ("bdf1", "bdf2"):
            cfg = ExperimentConfig(space=space, N=16, scheme=scheme, potential="none",
                                   profile="linear", dt=1e-3, t_end=0.1)
            solver = cfg.make_solver()
            r = log.add(integrate(cfg, solver, record=False))
            d = solver.disc
            drift = max(drift, float(np.max(np.abs(d.positions(r.final_state.coeffs) - d.nodes))))
            same &= r.steps == 100
    ok = bool(same and drift == 0.0)
    return CheckResult(10, "oracle reductions", ok,
                       f"v=0 advection residual bit-identical: {bool(same)}; "
                       f"identity drift after 100 steps {drift:.1e}")


CHECKS = {
    1: check_temporal_order,
    5: check_eps_independence,
    6: check_eulerian_agreement,
    7: check_filter,
    8: check_axisymmetric,
    9: check_solver_properties,
    10: check_oracle_reductions,
    2: check_energy_law,
    3: check_jacobian,
    4: check_max_principle,
}


def run_checks(selected: Optional[list] = None, log: Optional[RunLog] = None,
               echo: Optional[Callable[[str], None]] = None) -> list:
    """Run the selected checks (default all), aggregates last; returns results sorted by number."""
    log = log or RunLog()
    wanted = set(selected or CHECKS)
    out = []
    for n, fn in CHECKS.items():
        if n not in wanted:
            continue
        t = time.perf_counter()
        try:
            res = fn(log)
        except Exception as exc:  # a crashing check is a failing check
            res = CheckResult(n, fn.__name__.removeprefix("check_").replace("_", " "), False,
                              f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t
        if echo:
            echo(res.line())
        out.append(res)
    return sorted(out, key=lambda r: r.number)
