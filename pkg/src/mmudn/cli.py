"""Command-line entry point.

Subcommands: ``run``, ``snapshot``, ``verify``, ``export-lp``, ``calibrate``.
Failures exit nonzero after printing one ``error: kind=... message=...``
line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import ExperimentError, load_spec, run_campaign, run_snapshot, run_verification
from .experiments.harness import ExperimentSpec, cached_power
from .milp import ModelError, build_milp, choose_big_m, export_lp
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    compute_gain_matrix,
    generate_topology,
    load_config,
    validate_calibration,
)
from .sinr import write_association_csv

EXIT_USAGE = 2
EXIT_FAILURE = 1
SOLVER_CHOICES = ("milp", "brute", "both", "search")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _error_line(kind: str, message: str) -> str:
    return f"error: kind={kind} message={json.dumps(message)}"


def _scenario(args) -> ScenarioConfig:
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.config:
        return load_config(args.config, **overrides)
    return ScenarioConfig(num_ans=5, num_ues=10, antennas_per_an=100, **overrides)


def cmd_run(args) -> int:
    overrides = dict(base_seed=args.seed, snapshots=args.snapshots, solver=args.solver,
                     out_dir=args.out, time_limit=args.time_limit, jobs=args.jobs)
    if args.config:
        spec = load_spec(args.config, **overrides)
    else:
        spec = ExperimentSpec(campaign=args.campaign, **{k: v for k, v in overrides.items() if v is not None})
    report = run_campaign(spec)
    for line in report.summary_lines():
        print(line)
    print(f"overall gain {report.overall_gain:+.2%}, active ratio {report.active_ratio:.3f}, "
          f"{report.wall_time:.1f}s")
    if spec.out_dir is not None:
        print(f"wrote {Path(spec.out_dir) / 'snapshots.csv'} and {Path(spec.out_dir) / 'aggregate.csv'}")
    return 0


def cmd_snapshot(args) -> int:
    cfg = _scenario(args)
    res = run_snapshot(cfg, args.index, args.solver or "search", args.time_limit)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_association_csv(res.baseline_association, out / "baseline_association.csv")
    if res.optimal_association is not None:
        write_association_csv(res.optimal_association, out / "optimal_association.csv")
    for name, assoc, rep in (("baseline", res.baseline_association, res.baseline),
                             ("optimal", res.optimal_association, res.optimal)):
        if assoc is None:
            print(f"{name}: no association found")
            continue
        print(f"{name}: serving={list(assoc.serving_an)} min_rate={rep.min_rate:.6g} "
              f"min_sinr_db={rep.min_sinr_db:.4f} active={rep.active_an_count}")
    line = (f"compare: baseline {res.baseline.min_rate:.6g} optimal "
            f"{res.optimal.min_rate if res.optimal else float('nan'):.6g} status {res.outcome.status}")
    if res.oracle is not None:
        line += f" milp_theta {res.outcome.theta:.9g} brute_theta {res.oracle.theta:.9g}"
    print(line)
    return 0 if res.outcome.status != "mismatch" else EXIT_FAILURE


def cmd_verify(args) -> int:
    rep = run_verification(seed=args.seed or 0, instances=args.snapshots or 100, time_limit=args.time_limit)
    print(rep.line())
    if rep.failures:
        print(_error_line("mismatch", f"instances {rep.failures} did not match"), file=sys.stderr)
        return EXIT_FAILURE
    return 0


def cmd_export_lp(args) -> int:
    cfg = _scenario(args)
    gains = compute_gain_matrix(generate_topology(cfg, args.index), cfg).gains
    p = cached_power(cfg).per_an_power_linear
    L = cfg.antennas_per_an
    model = build_milp(gains, L, p, choose_big_m(gains, L, p, args.big_m))
    if not args.out:
        export_lp(model, sys.stdout)
    else:
        export_lp(model, args.out)
        print(f"wrote {args.out}: {model.catalog.num_binary} binaries, "
              f"{model.catalog.num_continuous} continuous, {model.num_rows} rows")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _scenario(args)
    power = cached_power(cfg)
    check = validate_calibration(cfg, power)
    print(f"target_snr_db {cfg.target_snr_db:.6g}")
    print(f"mean_gain {power.mean_gain:.6g}")
    print(f"total_power {power.total_power_linear:.6g}")
    print(f"per_an_power {power.per_an_power_linear:.6g}")
    print(f"validation_snr_db {check:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="scenario file (experiment spec file for 'run')")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--snapshots", type=int, help="snapshots per point ('verify': instances)")
    common.add_argument("--solver", choices=SOLVER_CHOICES)
    common.add_argument("--out", help="output directory ('export-lp': output file)")
    common.add_argument("--time-limit", type=float, help="per-solve time limit in seconds")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="mmudn", description="Max-min SINR user association for Massive-MIMO small cells.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("run", parents=[common], help="run a campaign from a spec file")
    p.add_argument("--campaign", default="densification", help="campaign when no --config is given")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("snapshot", parents=[common], help="solve one drop and compare with the baseline")
    p.add_argument("--index", type=int, default=0, help="snapshot index")
    p.set_defaults(func=cmd_snapshot)
    p = sub.add_parser("verify", parents=[common], help="MILP versus enumeration on seeded instances")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("export-lp", parents=[common], help="write the MILP of one drop in LP format")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--big-m", choices=("global", "bottleneck"), default="global")
    p.set_defaults(func=cmd_export_lp)
    p = sub.add_parser("calibrate", parents=[common], help="print the power calibration")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(_error_line("usage", str(exc)), file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ExperimentError, ScenarioError) as exc:
        print(_error_line("usage", str(exc)), file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, OSError, ValueError, RuntimeError) as exc:
        print(_error_line(type(exc).__name__, str(exc)), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
