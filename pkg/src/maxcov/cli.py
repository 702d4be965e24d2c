"""``maxcov`` command line: solve one instance, run a sweep, or inspect an instance.

Exit codes: 0 success, 1 usage/config error, 2 parse error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import (
    Algorithm,
    CdConvention,
    ConfigError,
    ExperimentSpec,
    FrMode,
    emit_report,
    emit_route_plot,
    instance_critical_distance,
    load_instance,
    resolve_flight_range,
    run_sweep,
    solve,
)
from .mmas import MmasParams, stats_to_csv
from .model import ProblemConfig, plan_to_text, validate_plan
from .tsplib import Metric, TsplibParseError

log = logging.getLogger("maxcov")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maxcov", description="Maximum target coverage routing for a range-limited UAV fleet.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="plan routes for one instance")
    s.add_argument("--instance", required=True, help="TSPLIB file, or a bundled name such as ch150")
    s.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.EUC2D_EXACT.value)
    s.add_argument("--base", type=int, default=0)
    s.add_argument("--algorithm", choices=[a.value for a in Algorithm], required=True)
    s.add_argument("--fr-mode", choices=[m.value for m in FrMode], required=True)
    s.add_argument("--fr", type=float, help="flight range for --fr-mode absolute")
    s.add_argument("--cd-convention", choices=[c.value for c in CdConvention], default=CdConvention.FARTHEST.value)
    s.add_argument("--uavs", type=int, required=True)
    d = MmasParams()
    s.add_argument("--ants", type=int, default=d.num_ants)
    s.add_argument("--iters", type=int, default=d.iterations)
    s.add_argument("--beta", type=float, default=d.beta)
    s.add_argument("--rho", type=float, default=d.rho)
    s.add_argument("--update-rule", choices=["per-ant", "iteration-best"], default=d.update_rule.value)
    s.add_argument("--tau-min-schedule", choices=["static", "dynamic"], default=d.tau_min_schedule.value)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="write the plan here instead of stdout")
    s.add_argument("--plot", help="write an SVG drawing of the plan")
    s.add_argument("--stats", help="write per-iteration MMAS statistics as CSV")

    w = sub.add_parser("sweep", help="run a JSON-described experiment")
    w.add_argument("--spec", required=True)
    w.add_argument("--out", help="report path (default stdout)")
    w.add_argument("--format", choices=["csv", "json", "table"], default="csv")
    w.add_argument("--jobs", type=int, default=1, help="worker processes")

    i = sub.add_parser("info", help="print instance statistics")
    i.add_argument("--instance", required=True)
    i.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.EUC2D_EXACT.value)
    i.add_argument("--base", type=int, default=0)
    return p


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from exc


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, args.metric, args.base)
    cd = instance_critical_distance(inst, args.cd_convention)
    fr = resolve_flight_range(args.fr_mode, cd, args.fr)
    cfg = ProblemConfig(fr, args.uavs)
    params = MmasParams(beta=args.beta, rho=args.rho, num_ants=args.ants, iterations=args.iters,
                        seed=args.seed, update_rule=args.update_rule, tau_min_schedule=args.tau_min_schedule)
    plan, result = solve(inst, cfg, args.algorithm, params)
    problems = validate_plan(plan, inst, cfg)
    if problems:
        raise RuntimeError(f"solver produced an infeasible plan: {problems}")
    log.info("%s: FR=%.4f UAVs=%d coverage=%.2f%% distance=%.4f",
             args.algorithm, fr, args.uavs, plan.coverage, plan.total_distance)
    _write(args.out, plan_to_text(plan))
    if args.plot:
        _write(args.plot, emit_route_plot(inst, plan))
    if args.stats:
        if result is None:
            raise ConfigError("--stats is only available with --algorithm mmas")
        _write(args.stats, stats_to_csv(result.stats))
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        spec = ExperimentSpec.from_json(args.spec)
    except FileNotFoundError as exc:
        raise ConfigError(f"spec file not found: {exc.filename}") from None

    def progress(alg, uavs, outcome):
        log.info("%s uavs=%d tc=%.2f%% (%.2fs)", alg.value, uavs, outcome[0], outcome[2])

    records = run_sweep(spec, jobs=args.jobs, progress=progress)
    _write(args.out, emit_report(records, args.format))
    return EXIT_OK


def cmd_info(args) -> int:
    inst = load_instance(args.instance, args.metric, args.base)
    d = inst.distances.d
    off = d[~np.eye(inst.n, dtype=bool)]
    cd = instance_critical_distance(inst)
    to_base = np.delete(d[inst.base_index], inst.base_index)
    info = {
        "name": inst.name,
        "n": inst.n,
        "targets": inst.num_targets,
        "base": inst.base_index,
        "metric": inst.metric.value,
        "critical_distance": cd,
        "distance_min": float(off.min()),
        "distance_mean": float(off.mean()),
        "distance_max": float(off.max()),
        # fraction of targets whose out-and-back flight fits the range: an upper bound on coverage
        "reachable_pct": {
            mode.value: 100.0 * float(np.mean(2 * to_base <= resolve_flight_range(mode, cd)))
            for mode in (FrMode.CD_HALF, FrMode.CD, FrMode.CD_DOUBLE)
        },
    }
    sys.stdout.write(json.dumps(info, indent=2) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    handler = {"solve": cmd_solve, "sweep": cmd_sweep, "info": cmd_info}[args.command]
    try:
        return handler(args)
    except (TsplibParseError, json.JSONDecodeError) as exc:
        print(f"maxcov: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"maxcov: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"maxcov: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
