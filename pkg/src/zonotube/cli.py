"""Command-line entry point.

Exit codes
----------
0  success
1  a set-membership invariant failed during simulation
2  invalid config, gains file, log or arguments
3  offline synthesis infeasible (reason printed as JSON)
4  a gains file failed re-verification
5  an online MPC problem was infeasible (step recorded in the summary)
"""

import argparse
import json
import sys
from pathlib import Path

from zonotube.errors import ConfigError, InfeasibleError
from zonotube.experiment import (
    bundled_configs,
    check_gains,
    load_config,
    load_gains,
    run_seeds,
    summarize,
    synthesize_experiment,
    write_gains,
)
from zonotube.sim import write_mpc_dump

EXIT_OK = 0
EXIT_MEMBERSHIP = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_CERTIFICATE = 4
EXIT_RUNTIME = 5


def _emit(payload, stream=None):
    print(json.dumps(payload, sort_keys=True), file=stream or sys.stdout)


def _out_dir(args, cfg):
    out = Path(args.out) if args.out else Path(cfg.raw.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args):
    cfg = load_config(args.config)
    try:
        doc = synthesize_experiment(cfg)
    except InfeasibleError as err:
        _emit({"status": "infeasible", "reason": err.reason, "message": str(err)})
        return EXIT_INFEASIBLE
    path = Path(args.out) if args.out else Path(cfg.raw.get("output_dir", "out")) / "gains.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_gains(path, doc)
    _emit({"status": "ok", "gains": str(path)})
    return EXIT_OK


def _verified(cfg, doc):
    report = check_gains(cfg, doc)
    return all(report.values()), report


def cmd_verify(args):
    cfg = load_config(args.config)
    ok, report = _verified(cfg, load_gains(args.gains))
    _emit({"status": "ok" if ok else "mismatch", "checks": report})
    return EXIT_OK if ok else EXIT_CERTIFICATE


def cmd_simulate(args):
    cfg = load_config(args.config)
    doc = load_gains(args.gains)
    ok, report = _verified(cfg, doc)
    if not ok:
        _emit({"status": "mismatch", "checks": report})
        return EXIT_CERTIFICATE
    start = cfg.seeds[0] if args.seed is None else args.seed
    count = len(cfg.seeds) if args.num_seeds is None else args.num_seeds
    out = _out_dir(args, cfg)
    results = run_seeds(cfg, doc, range(start, start + count), jobs=args.jobs)
    for seed, logs, _ in results:
        for label, log in (logs or {}).items():
            log.write_csv(out / f"{cfg.name}_seed{seed:03d}_{label}.csv")
            if args.mpc_dump and "mpc" in log.meta:
                write_mpc_dump(out / f"{cfg.name}_seed{seed:03d}_{label}_mpc.csv", log.meta["mpc"])
    summary = summarize(cfg, results)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit({"status": "ok" if summary["ok"] else "failed", "summary": str(out / "summary.json")})
    if summary["failures"]:
        return EXIT_RUNTIME
    return EXIT_OK if summary["membership_ok"] else EXIT_MEMBERSHIP


def cmd_plot(args):
    from zonotube import plotting
    from zonotube.sets import bounding_box
    from zonotube.sim import read_csv

    logs = []
    for p in args.logs:
        try:
            logs.append(read_csv(p, label=Path(p).stem))
        except OSError as err:
            raise ConfigError(f"cannot read {p}: {err}") from err
        except ValueError as err:
            raise ConfigError(f"{p}: {err}") from err
    tube = bounds = None
    if args.config:
        cfg = load_config(args.config)
        tube = plotting.tube_set(cfg.spec)
        if cfg.spec.S_u is not None:
            bounds = bounding_box(cfg.spec.S_u)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for log in logs:
        stem = out / log.label
        if log.x.shape[1] >= 2:
            written.append(plotting.plot_trajectory(log, f"{stem}_trajectory.svg", tube=tube))
        written.append(plotting.plot_states(log, f"{stem}_states.svg"))
        if not any(v != v for v in log.u.ravel()):
            written.append(plotting.plot_inputs(log, f"{stem}_inputs.svg", bounds))
    if len(logs) > 1:
        written.append(plotting.plot_error_comparison(logs, out / "error_comparison.svg"))
    _emit({"status": "ok", "figures": written})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zonotube",
        description="Set-membership observers and tube MPC on constrained zonotopes.",
        epilog=f"bundled configs: {', '.join(bundled_configs())}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="offline gain synthesis; writes a gains file")
    p.add_argument("--config", required=True, help="config path or bundled config name")
    p.add_argument("--out", help="gains file path (default: <output_dir>/gains.json)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="seeded rollouts; writes CSV logs and summary.json")
    p.add_argument("--config", required=True)
    p.add_argument("--gains", required=True)
    p.add_argument("--out", help="output directory (default: the config's output_dir)")
    p.add_argument("--seed", type=int, help="first seed (default: from config)")
    p.add_argument("--num-seeds", type=int, help="number of seeds (default: from config)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for seeds")
    p.add_argument("--mpc-dump", action="store_true",
                   help="also write per-step MPC solve records (LP size, status, beta, t_P, J*, wall time)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="render SVG figures from CSV logs")
    p.add_argument("logs", nargs="+", help="CSV logs written by simulate")
    p.add_argument("--config", help="config supplying set outlines and input bounds")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("verify", help="re-check a gains file against its config")
    p.add_argument("--config", required=True)
    p.add_argument("--gains", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        _emit({"status": "invalid_input", "message": str(err)}, sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
