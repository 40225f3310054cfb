"""Command-line interface.

Subcommands
-----------
``check CONFIG``
    Print coefficient bounds and the solvability report for each candidate
    invariance radius; exit 0 iff some radius passes.
``certificate CONFIG``
    Compute the exponential-decay certificate (lambda, M) and print it with
    the margin-function values; exit 1 when the contraction check fails.
``simulate CONFIG``
    Integrate the network and write the trajectory CSV
    (``t,x_1..x_n,S_1..S_n,dx_1..dx_n,dS_1..dS_n``).
``stability CONFIG --history2 FILE``
    Simulate the same network from two histories, compute the certificate,
    and verify the decay envelope against the measured trajectory distance;
    exit 0 iff the bound is never violated.
``example``
    Materialize the built-in two-neuron benchmark configuration and run
    check + certificate + stability on a continuum grid (h = 0.01) and on
    the unit lattice.

Exit codes (stable contract): 0 success, 1 infeasible or bound violated,
2 configuration error, 3 runtime (stepping) failure.

The environment variable ``CHRONOSCALE_SEED`` is reserved for future
stochastic extensions; nothing reads it today, and all commands are fully
deterministic.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Sequence

from . import benchmark
from .analyzer import verify_bound, write_stability_csv
from .conditions import (
    DEFAULT_R_GRID,
    BoundSet,
    Certificate,
    InfeasibleError,
    check_H3,
    compute_bounds,
    find_lambda,
)
from .config import (
    ConfigError,
    RunConfig,
    RunOptions,
    parse_config,
    parse_history_text,
    serialize_config,
    serialize_history,
)
from .network import NetworkSpec
from .simulator import HistorySpec, SimulationError, StepFailureError, simulate
from .timescale import RegressivityError, TimeScale, TimeScaleError

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chronoscale",
        description="Delayed competitive neural networks on time scales: "
                    "solvability checks, exponential-decay certificates, "
                    "simulation, and stability experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_timescale_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--timescale", metavar="{Z|R|union:<a,b;c,d;...>}",
                       help="override the [timescale] section: Z (unit "
                            "lattice), R (continuum grid; span inferred "
                            "from the run), or union:<a,b;c,d;...> (closed "
                            "intervals joined by jumps)")
        p.add_argument("--h", type=float, metavar="STEP",
                       help="grid step for dense scales (default 0.01)")

    p_check = sub.add_parser("check", help="bounds + solvability report")
    p_check.add_argument("config", help="configuration file")
    p_check.add_argument("--r", type=float, metavar="RADIUS",
                         help="check this invariance radius only")
    add_timescale_flags(p_check)

    p_cert = sub.add_parser("certificate", help="decay certificate (lambda, M)")
    p_cert.add_argument("config", help="configuration file")
    p_cert.add_argument("--r", type=float, metavar="RADIUS",
                        help="invariance radius for the feasibility gate")
    add_timescale_flags(p_cert)

    p_sim = sub.add_parser("simulate", help="integrate and write trajectory CSV")
    p_sim.add_argument("config", help="configuration file")
    p_sim.add_argument("--t-end", dest="t_end", type=float, metavar="T")
    p_sim.add_argument("--out", metavar="PATH", help="CSV path (default: stdout)")
    add_timescale_flags(p_sim)

    p_stab = sub.add_parser("stability",
                            help="paired simulation + certificate + bound check")
    p_stab.add_argument("config", help="configuration file (primary history)")
    p_stab.add_argument("--history2", metavar="PATH",
                        help="file with the second [history] section")
    p_stab.add_argument("--t-end", dest="t_end", type=float, metavar="T")
    p_stab.add_argument("--out", metavar="PATH", help="stability CSV path")
    p_stab.add_argument("--lambda-override", dest="lambda_override", type=float,
                        metavar="V",
                        help="replace the certified decay rate by V "
                             "(testing only; breaks the guarantee)")
    add_timescale_flags(p_stab)

    p_ex = sub.add_parser("example",
                          help="materialize the built-in benchmark and run "
                               "check + certificate + stability on R and Z")
    p_ex.add_argument("--out", metavar="DIR", default="chronoscale-example",
                      help="directory for the materialized config files")

    return parser


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _load_config(path: str) -> RunConfig:
    return parse_config(_read_text(path))


def _timescale_from_flag(flag: str, h: float | None,
                         start: float, stop: float) -> TimeScale:
    kind = flag.strip()
    upper = kind.upper()
    if upper == "Z":
        return TimeScale.integer_lattice()
    if upper == "R":
        return TimeScale.real_interval(start, stop, h if h is not None else 0.01)
    if upper.startswith("UNION:"):
        body = kind[len("union:"):]
        intervals = []
        for chunk in body.split(";"):
            parts = chunk.split(",")
            if len(parts) != 2:
                raise ConfigError(
                    f"--timescale union: each interval needs 'a,b', got {chunk!r}")
            try:
                intervals.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ConfigError(
                    f"--timescale union: bad endpoint in {chunk!r}") from None
        if not intervals:
            raise ConfigError("--timescale union: no intervals given")
        return TimeScale.union_of_intervals(
            intervals, step=h if h is not None else 0.01)
    raise ConfigError(
        f"unknown --timescale value {flag!r} (expected Z, R, or union:<...>)")


def _resolve_timescale(args: argparse.Namespace, cfg: RunConfig,
                       t_end: float, required: bool = True) -> TimeScale | None:
    """Pick the time scale: the --timescale flag wins over the config section."""
    window = cfg.history.window if cfg.history is not None else 1.0
    start = cfg.run.t0 - window - 0.5
    flag = getattr(args, "timescale", None)
    h = getattr(args, "h", None)
    if flag:
        return _timescale_from_flag(flag, h, start, t_end)
    if cfg.timescale is not None:
        if h is not None:
            desc = dict(cfg.timescale_desc)
            kind = desc.get("kind", "").upper()
            if kind in ("R", "UNION"):
                desc["step"] = repr(h)
                from .config import _build_timescale  # rebuild with the new step
                items = [(0, k, v) for k, v in desc.items()]
                return _build_timescale(items)[0]
        return cfg.timescale
    if required:
        raise ConfigError("no [timescale] section and no --timescale flag")
    return None


def _activation_zeros(spec: NetworkSpec) -> tuple[float, ...]:
    return tuple(float(a.fn(0.0)) for a in spec.activations)


def _radius_grid(args: argparse.Namespace, run: RunOptions) -> Sequence[float]:
    if getattr(args, "r", None) is not None:
        return (float(args.r),)
    if run.r is not None:
        return (run.r,)
    if run.r_grid is not None:
        return run.r_grid
    return tuple(float(v) for v in DEFAULT_R_GRID)


def _certificate_for(spec: NetworkSpec, bounds: BoundSet,
                     include_delayed_feedback: bool) -> Certificate:
    return find_lambda(bounds, spec.lipschitz,
                       include_delayed_feedback=include_delayed_feedback)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    ts = _resolve_timescale(args, cfg, cfg.run.t_end, required=False)
    bounds = compute_bounds(cfg.spec, ts)
    for line in bounds.summary_lines():
        print(line)
    grid = _radius_grid(args, cfg.run)
    feasible = False
    for r in grid:
        report = check_H3(bounds, cfg.spec.lipschitz, _activation_zeros(cfg.spec),
                          float(r), cfg.run.include_delayed_feedback)
        print()
        for line in report.summary_lines():
            print(line)
        feasible = feasible or report.feasible
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_certificate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    t_end = cfg.run.t_end
    ts = _resolve_timescale(args, cfg, t_end)
    bounds = compute_bounds(cfg.spec, ts)
    grid = _radius_grid(args, cfg.run)
    gate = None
    for r in grid:
        report = check_H3(bounds, cfg.spec.lipschitz, _activation_zeros(cfg.spec),
                          float(r), cfg.run.include_delayed_feedback)
        if report.feasible:
            gate = report
            break
    if gate is None:
        raise InfeasibleError(
            "no radius in the grid passes the solvability check; "
            "no certificate is issued")
    print(f"feasible radius r = {gate.r:g} (kappa = {gate.kappa:.6f})")
    cert = _certificate_for(cfg.spec, bounds, cfg.run.include_delayed_feedback)
    print(cert.to_text(), end="")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if cfg.history is None:
        raise ConfigError("simulate needs a [history] section")
    t_end = args.t_end if args.t_end is not None else cfg.run.t_end
    ts = _resolve_timescale(args, cfg, t_end)
    traj = simulate(cfg.spec, cfg.history, ts, t_end, t0=cfg.run.t0,
                    corrector_iters=cfg.run.corrector_iters)
    if args.out:
        traj.to_csv(args.out)
        print(f"wrote {args.out} ({len(traj.times)} rows)")
    else:
        traj.to_csv(sys.stdout)
    return EXIT_OK


def cmd_stability(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if cfg.history is None:
        raise ConfigError("stability needs a [history] section")
    if not args.history2:
        raise ConfigError("stability needs --history2 with a second history file")
    hist2 = parse_history_text(_read_text(args.history2), cfg.spec.n)
    t_end = args.t_end if args.t_end is not None else cfg.run.t_end
    ts = _resolve_timescale(args, cfg, t_end)
    bounds = compute_bounds(cfg.spec, ts)
    cert = _certificate_for(cfg.spec, bounds, cfg.run.include_delayed_feedback)
    if args.lambda_override is not None:
        cert = dataclasses.replace(
            cert, lam=float(args.lambda_override),
            witness=f"decay rate manually overridden to {args.lambda_override:g} "
                    f"(testing only)")
    traj_a = simulate(cfg.spec, cfg.history, ts, t_end, t0=cfg.run.t0,
                      corrector_iters=cfg.run.corrector_iters)
    traj_b = simulate(cfg.spec, hist2, ts, t_end, t0=cfg.run.t0,
                      corrector_iters=cfg.run.corrector_iters)
    report = verify_bound(traj_a, traj_b, cfg.history, hist2, cert, ts)
    print(report.to_text(), end="")
    if args.out:
        write_stability_csv(report, args.out)
        print(f"wrote {args.out} ({report.n_points} rows)")
    return EXIT_OK if not report.violated else EXIT_INFEASIBLE


def cmd_example(args: argparse.Namespace) -> int:
    spec = benchmark.two_neuron_spec()
    hist_a, hist_b = benchmark.history_pairs()["trig"]
    run = RunOptions(t_end=50.0, r=0.45, include_delayed_feedback=False)
    ts_desc = {"kind": "R", "start": "-2.0", "stop": "50.0", "step": "0.01"}

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_path = out_dir / "benchmark.cfg"
    history2_path = out_dir / "history2.cfg"
    config_path.write_text(serialize_config(spec, hist_a, ts_desc, run),
                           encoding="utf-8")
    history2_path.write_text(serialize_history(hist_b), encoding="utf-8")
    print(f"wrote {config_path}")
    print(f"wrote {history2_path}")
    print()

    L = spec.lipschitz
    f0 = _activation_zeros(spec)
    bounds_plain = compute_bounds(spec)
    report = check_H3(bounds_plain, L, f0, 0.45,
                      include_delayed_feedback=False)
    print("== solvability check (r = 0.45) ==")
    print(f"P_1 = {report.P[0]:.4f}   P_2 = {report.P[1]:.4f}")
    print(f"Q_1 = {report.Q[0]:.4f}   Q_2 = {report.Q[1]:.4f}")
    print(f"Pbar_1 = {report.Pbar[0]:.4f}   Pbar_2 = {report.Pbar[1]:.4f}")
    print(f"Qbar_1 = {report.Qbar[0]:.4f}   Qbar_2 = {report.Qbar[1]:.4f}")
    print(f"max invariance expression = {report.max_r_expr:.4f}")
    print(f"kappa = {report.kappa:.4f}")
    print(f"feasible: {'yes' if report.feasible else 'no'}")

    ok = report.feasible
    scales: tuple[tuple[str, TimeScale, float], ...] = (
        ("R (grid h = 0.01)", TimeScale.real_interval(-2.0, 50.0, 0.01), 50.0),
        ("Z (unit lattice)", TimeScale.integer_lattice(), 200.0),
    )
    for label, ts, t_end in scales:
        bounds = compute_bounds(spec, ts)
        cert = _certificate_for(spec, bounds, include_delayed_feedback=False)
        print()
        print(f"== certificate on T = {label} ==")
        print(cert.to_text(), end="")
        traj_a = simulate(spec, hist_a, ts, t_end)
        traj_b = simulate(spec, hist_b, ts, t_end)
        stab = verify_bound(traj_a, traj_b, hist_a, hist_b, cert, ts)
        print()
        print(f"== stability on T = {label} ==")
        print(stab.to_text(), end="")
        ok = ok and not stab.violated
    return EXIT_OK if ok else EXIT_INFEASIBLE


_HANDLERS = {
    "check": cmd_check,
    "certificate": cmd_certificate,
    "simulate": cmd_simulate,
    "stability": cmd_stability,
    "example": cmd_example,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        code = exc.code
        return code if isinstance(code, int) else EXIT_CONFIG
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except RegressivityError as exc:
        print(f"regressivity violated: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StepFailureError as exc:
        print(f"step failure at t = {exc.t:g}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except TimeScaleError as exc:
        print(f"time-scale error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
