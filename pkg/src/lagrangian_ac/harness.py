"""Experiment drivers: single runs, time-step convergence studies and
Lagrangian/Eulerian comparisons, with CSV/JSON output."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import Domain1D, EnergyReport, FlowMapState, InitialProfile, Potential
from .errors import ConfigError, FlowMapError, NoInterfaceError, StepFailure
from .eulerian import EulerianAllenCahn
from .extensions import AxisymmetricSolver, polar_disc
from .reconstruction import (interface_level, interface_metrics, max_principle_check,
                             reconstruct, spectral_profile)
from .schemes import TrajectorySolver
from .spatial import make_disc

OUTPUT_ENV = "LAGRANGIAN_AC_OUT"
STEADY_TOL = 1e-9
STEADY_STEPS = 10
ENERGY_HEADER = ["step", "t", "E_total", "E_grad", "E_pot", "E_aug", "slack", "newton_iters"]
SNAPSHOT_HEADER = ["X", "x", "f"]


def _num(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class ExperimentConfig:
    """One Lagrangian run. ``N`` is the element count (fem) or degree (spectral)."""

    geometry: str = "cartesian"
    scheme: str = "bdf1"
    space: str = "spectral"
    N: int = 64
    eps2: float = 1e-3
    dt: float = 1e-4
    t_end: float = 0.1
    profile: str = "linear"
    profile_scale: float = 1.0
    potential: str = "double_well"
    theta: float = 1.0
    theta_c: float = 2.0
    advection_v: Optional[float] = None
    filter: bool = False
    filter_a: Optional[float] = None
    filter_exponent: float = 1.0
    snapshot_times: tuple = ()
    stop_at_steady: bool = False
    h: float = 1.0
    output_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.geometry in ("cartesian", "axisymmetric"), f"unknown geometry {self.geometry!r}")
        need(self.scheme in ("bdf1", "bdf2"), f"unknown scheme {self.scheme!r}")
        need(self.space in ("fem", "spectral"), f"unknown space {self.space!r}")
        need(self.profile in ("linear", "parabola", "constant"), f"unknown profile {self.profile!r}")
        need(self.potential in ("double_well", "logarithmic", "none"),
             f"unknown potential {self.potential!r}")
        need(int(self.N) == self.N and self.N >= 2, "N must be an integer >= 2")
        for name in ("eps2", "dt", "theta", "theta_c", "h", "filter_exponent"):
            v = getattr(self, name)
            need(np.isfinite(v) and v > 0, f"{name} must be positive")
        need(np.isfinite(self.t_end) and self.t_end >= 0, "t_end must be nonnegative")
        need(self.filter_a is None or self.filter_a > 0, "filter_a must be positive")
        need(self.advection_v is None or np.isfinite(self.advection_v), "advection_v must be finite")
        need(all(0.0 <= t <= self.t_end + 1e-12 for t in self.snapshot_times),
             "snapshot_times must lie in [0, t_end]")
        if self.geometry == "axisymmetric":
            need(self.scheme == "bdf1", "the axisymmetric stepper is first order only")
            need(not self.advection_v, "advection is only available in cartesian geometry")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, raw in data.items():
            k = key.strip().replace("-", "_")
            k = {"n": "N", "out": "output_dir"}.get(k, k)
            if k not in names:
                raise ConfigError(f"unknown config key {key!r}")
            kw[k] = coerce_value(k, raw)
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Read a ``key = value`` file (an optional ``[experiment]`` header is allowed)."""
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if not text.lstrip().startswith("["):
            text = "[experiment]\n" + text
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        data = {}
        for section in parser.sections():
            data.update(parser[section])
        return cls.from_mapping(data)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self) | {"snapshot_times": list(self.snapshot_times)}

    def run_name(self) -> str:
        return f"{self.geometry}_{self.scheme}_{self.space}_N{self.N}_eps2-{self.eps2:g}_{self.profile}"

    # -- problem objects -------------------------------------------------

    def make_profile(self) -> InitialProfile:
        if self.profile == "linear":
            return InitialProfile.linear(self.profile_scale)
        if self.profile == "constant":
            return InitialProfile.constant(self.profile_scale)
        return InitialProfile.parabola()

    def make_potential(self) -> Potential:
        if self.potential == "double_well":
            return Potential.double_well(self.eps2)
        if self.potential == "logarithmic":
            return Potential.logarithmic(self.theta, self.theta_c)
        return Potential.none()

    def make_solver(self):
        prof, pot = self.make_profile(), self.make_potential()
        if self.geometry == "axisymmetric":
            return AxisymmetricSolver(polar_disc(self.space, self.N, self.h), prof, pot, self.dt)
        disc = make_disc(self.space, self.N)
        return TrajectorySolver(disc, prof, pot, self.dt, scheme=self.scheme,
                                advection=self.advection_v or 0.0)


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def coerce_value(key, raw):
    """Parse a config string for field ``key``; non-strings pass through."""
    if not isinstance(raw, str):
        return raw
    s = raw.strip()
    try:
        if key in ("N",):
            return int(s)
        if key in ("filter", "stop_at_steady"):
            if s.lower() not in _BOOL:
                raise ValueError(f"expected on/off, got {s!r}")
            return _BOOL[s.lower()]
        if key in ("advection_v", "filter_a"):
            return None if s.lower() in ("", "none", "off") else float(s)
        if key == "snapshot_times":
            return tuple(float(t) for t in s.replace(",", " ").split())
        if key in ("eps2", "dt", "t_end", "profile_scale", "theta", "theta_c", "filter_exponent", "h"):
            return float(s)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    if key == "output_dir":
        return s or None
    return s.lower()


# ---------------------------------------------------------------------------
# running


@dataclass
class SnapshotRecord:
    t: float
    state: FlowMapState
    metrics: Optional[dict]
    max_principle: dict


@dataclass
class RunResult:
    config: ExperimentConfig
    energy_rows: list
    snapshots: list
    final_state: FlowMapState
    steps: int
    steady: bool
    violations: int
    min_jacobian: float
    failure: Optional[str] = None
    files: list = field(default_factory=list)

    @property
    def energy_monotone(self) -> bool:
        return self.violations == 0

    @property
    def max_principle_ok(self) -> bool:
        return all(s.max_principle["ok"] for s in self.snapshots)

    @property
    def status(self) -> str:
        if self.failure:
            return "solver_failure"
        return "ok" if self.energy_monotone else "energy_violation"

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "status": self.status,
            "failure": self.failure,
            "steps": self.steps,
            "final_time": self.final_state.time,
            "steady_state": self.steady,
            "energy_monotone": self.energy_monotone,
            "audit_violations": self.violations,
            "min_jacobian": self.min_jacobian,
            "max_principle_ok": self.max_principle_ok,
            "snapshots": [{"t": s.t, "interface": s.metrics, "max_principle": s.max_principle}
                          for s in self.snapshots],
        }


def _eulerian_range(solver, state):
    d = solver.disc
    x = d.positions(state.coeffs)
    return float(x[0]), float(d.domain.right)


def snapshot_metrics(solver, state, samples: int = 2001) -> dict | None:
    """Interface location/width of the reconstructed field, or None without a crossing."""
    lo, hi = _eulerian_range(solver, state)
    xs = np.linspace(lo, hi, samples)
    f = reconstruct(state, solver.disc, solver.profile, xs)
    level, amp = interface_level(solver.profile, solver.disc.domain)
    if amp == 0.0:
        return None
    try:
        m = interface_metrics(f, xs, level, amp)
    except NoInterfaceError:
        return None
    return {"level": level, "location": m.location, "width": m.width, "crossings": m.crossings}


def _max_principle(solver, state, samples=1000) -> dict:
    lo, hi = _eulerian_range(solver, state)
    rep = max_principle_check(state, solver.disc, solver.profile, samples, Domain1D(lo, hi))
    bound = solver.profile.sup_abs(solver.disc.domain)
    return {"max_abs": rep.max_abs, "bound": bound, "ok": bool(rep.max_abs <= bound + 1e-12)}


def _energy_row(step, t, e: EnergyReport, slack, iters):
    return [step, t, e.total, e.gradient_part, e.potential_part, e.bdf2_augmentation, slack, iters]


def integrate(cfg: ExperimentConfig, solver=None, record: bool = True) -> RunResult:
    """Run ``cfg`` in memory (no files). Solver errors become :class:`StepFailure`."""
    solver = solver or cfg.make_solver()
    disc = solver.disc
    state = disc.identity_state()
    n_steps = int(round(cfg.t_end / cfg.dt))
    marks = {int(round(t / cfg.dt)): t for t in set(cfg.snapshot_times) | {0.0, n_steps * cfg.dt}}
    rows = [_energy_row(0, 0.0, solver.energy(state), 0.0, 0)]
    snaps, viol, quiet, steady = [], 0, 0, False
    min_j = disc.min_jacobian(state.coeffs)

    def snap(t, st):
        snaps.append(SnapshotRecord(t, st, snapshot_metrics(solver, st) if record else None,
                                    _max_principle(solver, st)))

    if 0 in marks:
        snap(0.0, state)
    k = 0
    try:
        for rec in solver.march(state, n_steps):
            k = rec.step
            state = rec.state
            viol += not rec.audit.satisfied
            min_j = min(min_j, rec.min_jacobian)
            rows.append(_energy_row(k, state.time, rec.energy, rec.audit.slack, rec.newton_iters))
            quiet = quiet + 1 if rec.displacement < STEADY_TOL else 0
            if k in marks and k > 0:
                snap(marks[k], state)
            if cfg.stop_at_steady and quiet >= STEADY_STEPS:
                steady = True
                if k not in marks:
                    snap(state.time, state)
                break
    except FlowMapError as exc:
        partial = RunResult(cfg, rows, snaps, state, k, False, viol, min_j, failure=str(exc))
        raise StepFailure(k + 1, exc, partial) from exc
    return RunResult(cfg, rows, snaps, state, k, steady, viol, min_j)


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else _num(v) for v in r])


def resolve_output_dir(cfg: ExperimentConfig) -> Path:
    if cfg.output_dir:
        return Path(cfg.output_dir)
    root = os.environ.get(OUTPUT_ENV, "runs")
    return Path(root) / cfg.run_name()


def write_outputs(result: RunResult, out: Path, solver=None) -> list:
    cfg = result.config
    solver = solver or cfg.make_solver()
    out.mkdir(parents=True, exist_ok=True)
    files = []
    p = out / "energy.csv"
    _write_csv(p, ENERGY_HEADER, result.energy_rows)
    files.append(p)
    d = solver.disc
    for s in result.snapshots:
        X = d.nodes
        x = d.positions(s.state.coeffs)
        f = solver.profile.value(X)
        p = out / f"snapshot_t{s.t:.6g}.csv"
        _write_csv(p, SNAPSHOT_HEADER, zip(X, x, f))
        files.append(p)
        if cfg.filter:
            sp = spectral_profile(s.state, d, solver.profile)
            lo, hi = _eulerian_range(solver, s.state)
            xs = np.linspace(lo, hi, 1001)
            p = out / f"filtered_t{s.t:.6g}.csv"
            _write_csv(p, ["x", "f_unfiltered", "f_filtered"],
                       zip(xs, sp(xs), sp.filtered(cfg.filter_a, cfg.filter_exponent)(xs)))
            files.append(p)
    p = out / "summary.json"
    p.write_text(json.dumps(_jsonable(result.summary()), indent=2, sort_keys=True) + "\n")
    files.append(p)
    # wall-clock data lives apart from the deterministic outputs
    meta = {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "version": __version__,
            "python": platform.python_version(), "numpy": np.__version__}
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return files


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Run and (by default) write energy history, snapshots and a JSON summary.

    On a solver error the partial outputs are still written before the
    :class:`StepFailure` propagates.
    """
    solver = cfg.make_solver()
    try:
        result = integrate(cfg, solver)
    except StepFailure as exc:
        if write and exc.partial is not None:
            exc.partial.files = write_outputs(exc.partial, resolve_output_dir(cfg), solver)
        raise
    if write:
        result.files = write_outputs(result, resolve_output_dir(cfg), solver)
    return result


# ---------------------------------------------------------------------------
# convergence in time


@dataclass
class ConvergenceResult:
    dts: list
    errors: list
    slope: float
    reference_dt: float
    scheme: str

    def rows(self):
        return list(zip(self.dts, self.errors))


def fitted_slope(dts, errors) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def _final_positions(cfg: ExperimentConfig):
    solver = cfg.make_solver()
    res = integrate(cfg.replace(snapshot_times=(), stop_at_steady=False), solver, record=False)
    return solver.disc.positions(res.final_state.coeffs), res


def convergence_study(base: ExperimentConfig, dt_list: Sequence[float],
                      reference_dt: float, runs: Optional[list] = None) -> ConvergenceResult:
    """L-infinity error of nodal positions at t_end against a BDF2 reference.

    ``runs`` (optional list) collects every :class:`RunResult` produced.
    """
    dts = [float(d) for d in dt_list]
    if len(dts) < 3:
        raise ConfigError("need at least 3 time steps")
    ratios = np.array(dts[1:]) / np.array(dts[:-1])
    if not np.allclose(ratios, ratios[0], rtol=1e-6) or ratios[0] == 1.0:
        raise ConfigError("dt_list must be geometrically spaced")
    if not reference_dt < min(dts) / 4:
        raise ConfigError("reference_dt must be below min(dt_list)/4")
    for d in dts + [reference_dt]:
        n = base.t_end / d
        if abs(n - round(n)) > 1e-8 * max(n, 1.0):
            raise ConfigError(f"t_end is not a multiple of dt={d}")
    ref, rres = _final_positions(base.replace(scheme="bdf2", dt=reference_dt))
    if runs is not None:
        runs.append(rres)
    errors, done = [], []
    try:
        for d in dts:
            x, res = _final_positions(base.replace(dt=d))
            if runs is not None:
                runs.append(res)
            errors.append(float(np.max(np.abs(x - ref))))
            done.append(d)
    except StepFailure:
        if base.output_dir:
            _write_csv(_mkdir(Path(base.output_dir)) / "convergence.csv", ["dt", "error"],
                       zip(done, errors))
        raise
    result = ConvergenceResult(dts, errors, fitted_slope(dts, errors), reference_dt, base.scheme)
    if base.output_dir:
        out = _mkdir(Path(base.output_dir))
        _write_csv(out / "convergence.csv", ["dt", "error"], result.rows())
        (out / "convergence.json").write_text(json.dumps(
            {"scheme": base.scheme, "reference_dt": reference_dt, "slope": result.slope,
             "dt": dts, "error": errors}, indent=2, sort_keys=True) + "\n")
    return result


def _mkdir(p: Path) -> Path:
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# method comparison


@dataclass(frozen=True)
class EulerianConfig:
    N: int = 256
    dt: float = 1e-4
    order: int = 2
    method: str = "spectral"


@dataclass
class ComparisonRow:
    t: float
    location_a: float
    location_b: float
    location_offset: float
    linf_outside_band: float
    linf: float


def _lagrangian_sampler(cfg: ExperimentConfig, times, xs, runs=None):
    solver = cfg.make_solver()
    res = integrate(cfg.replace(snapshot_times=tuple(times), t_end=max(times),
                                stop_at_steady=False), solver, record=False)
    if runs is not None:
        runs.append(res)
    by_t = {round(s.t, 12): s.state for s in res.snapshots}
    return {t: reconstruct(by_t[round(t, 12)], solver.disc, solver.profile, xs) for t in times}


def _eulerian_sampler(ecfg: EulerianConfig, ref: ExperimentConfig, times, xs):
    prof = ref.make_profile()
    sol = EulerianAllenCahn(ecfg.N, ref.make_potential(), ecfg.dt, ecfg.order, ecfg.method,
                            advection=ref.advection_v or 0.0)
    snaps = sol.run(prof.value(sol.x), max(times), times, prof.sup_abs(Domain1D()))
    by_t = {round(s.t, 12): s.f for s in snaps}
    return {t: sol.evaluate(by_t[round(t, 12)], xs) for t in times}


def compare_methods(cfg_a, cfg_b, times: Sequence[float], reference: Optional[ExperimentConfig] = None,
                    samples: int = 2001, band: float = 0.95, runs: Optional[list] = None):
    """Interface offsets and profile differences between two solvers per time.

    Each side is an :class:`ExperimentConfig` (Lagrangian) or an
    :class:`EulerianConfig`; an Eulerian side takes its physics (eps2,
    profile, potential, advection) from the Lagrangian side or ``reference``.
    The band excludes points where |f - level| <= band * amplitude in the
    first solution.
    """
    times = sorted(float(t) for t in times)
    lag = [c for c in (cfg_a, cfg_b) if isinstance(c, ExperimentConfig)]
    ref = reference or (lag[0] if lag else None)
    if ref is None:
        raise ConfigError("need at least one Lagrangian config or a reference")
    if len(lag) == 2 and (lag[0].eps2, lag[0].profile, lag[0].potential) != \
            (lag[1].eps2, lag[1].profile, lag[1].potential):
        raise ConfigError("compared runs must share eps2, profile and potential")
    xs = np.linspace(-1.0, 1.0, samples)

    def sample(c):
        if isinstance(c, ExperimentConfig):
            return _lagrangian_sampler(c, times, xs, runs)
        return _eulerian_sampler(c, ref, times, xs)

    fa, fb = sample(cfg_a), sample(cfg_b)
    level, amp = interface_level(ref.make_profile(), Domain1D())
    rows = []
    for t in times:
        a, b = fa[t], fb[t]
        la = interface_metrics(a, xs, level, amp).location
        lb = interface_metrics(b, xs, level, amp).location
        outside = np.abs(a - level) > band * amp
        diff = np.abs(a - b)
        rows.append(ComparisonRow(t, la, lb, abs(la - lb),
                                  float(np.max(diff[outside])) if np.any(outside) else 0.0,
                                  float(np.max(diff))))
    return rows
