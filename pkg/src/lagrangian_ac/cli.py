"""Command line front end: ``lagrangian-ac {run,convergence,compare,verify}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, FlowMapError
from .harness import (EulerianConfig, ExperimentConfig, coerce_value, compare_methods, convergence_study,
                      resolve_output_dir, run_experiment)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 2, 3, 4

# flag -> ExperimentConfig field
_FLAGS = {
    "scheme": "scheme", "space": "space", "n": "N", "eps2": "eps2", "dt": "dt",
    "t_end": "t_end", "profile": "profile", "potential": "potential", "filter": "filter",
    "advection_v": "advection_v", "geometry": "geometry", "out": "output_dir",
    "snapshot_times": "snapshot_times", "stop_at_steady": "stop_at_steady", "h": "h",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _experiment_flags(p):
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--scheme", choices=["bdf1", "bdf2"])
    p.add_argument("--space", choices=["fem", "spectral"])
    p.add_argument("--n", type=int, help="elements (fem) or polynomial degree (spectral)")
    p.add_argument("--eps2", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--profile", choices=["linear", "parabola", "constant"])
    p.add_argument("--potential", choices=["double_well", "logarithmic", "none"])
    p.add_argument("--filter", choices=["on", "off"])
    p.add_argument("--advection-v", type=float)
    p.add_argument("--geometry", choices=["cartesian", "axisymmetric"])
    p.add_argument("--snapshot-times", help="comma separated times")
    p.add_argument("--stop-at-steady", choices=["on", "off"])
    p.add_argument("--h", type=float, help="outer radius (axisymmetric)")
    p.add_argument("--out", help="output directory")


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    over = {}
    for flag, name in _FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            over[name] = coerce_value(name, v) if isinstance(v, str) else v
    return base.replace(**over)


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg)
    out = resolve_output_dir(cfg)
    print(f"{res.status}: {res.steps} steps to t={res.final_state.time:.6g}, "
          f"energy {res.energy_rows[0][2]:.6g} -> {res.energy_rows[-1][2]:.6g}, output in {out}")
    return EXIT_OK if res.status == "ok" else EXIT_SOLVER


def cmd_convergence(args) -> int:
    cfg = _config(args)
    res = convergence_study(cfg, _floats(args.dt_list), args.reference_dt)
    print("dt,error")
    for dt, err in res.rows():
        print(f"{dt!r},{err!r}")
    print(f"slope {res.slope:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    other = EulerianConfig(N=args.eulerian_n, dt=args.eulerian_dt, order=args.eulerian_order,
                           method=args.eulerian_method)
    rows = compare_methods(cfg, other, _floats(args.times))
    print("t,location_lagrangian,location_eulerian,offset,linf_outside_band,linf")
    for r in rows:
        print(",".join(repr(float(v)) for v in (r.t, r.location_a, r.location_b,
                                                   r.location_offset, r.linf_outside_band, r.linf)))
    if cfg.output_dir:
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        (Path(cfg.output_dir) / "comparison.json").write_text(
            json.dumps([r.__dict__ for r in rows], indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_checks

    only = [int(v) for v in _floats(args.only)] if args.only else None
    results = run_checks(only, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lagrangian-ac", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="single experiment")
    _experiment_flags(r)
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("convergence", help="time-step convergence study")
    _experiment_flags(c)
    c.add_argument("--dt-list", default="2e-3,1e-3,5e-4,2.5e-4")
    c.add_argument("--reference-dt", type=float, default=1e-5)
    c.set_defaults(func=cmd_convergence)
    m = sub.add_parser("compare", help="Lagrangian run against the Eulerian reference")
    _experiment_flags(m)
    m.add_argument("--times", default="0.01,0.05,0.1")
    m.add_argument("--eulerian-n", type=int, default=256)
    m.add_argument("--eulerian-dt", type=float, default=1e-4)
    m.add_argument("--eulerian-order", type=int, choices=[1, 2], default=2)
    m.add_argument("--eulerian-method", choices=["spectral", "fd"], default="spectral")
    m.set_defaults(func=cmd_compare)
    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--only", help="comma separated check numbers")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlowMapError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
