#!/usr/bin/env python3
"""
SPCAP command-line front end.

Usage:
    python3 scripts/spcap_cli.py generate --out instances/syn.spcap [--config gen.cfg] [--terminals 50 ...]
    python3 scripts/spcap_cli.py bounds instances/*.spcap [--dump_cuts output/cuts] [--dump_lp output/lp]
    python3 scripts/spcap_cli.py solve instances/syn.spcap --mode hybrid --seed 7 [--out csv]
    python3 scripts/spcap_cli.py report output/*.csv [--out csv]

Exit codes: 0 success, 1 usage or parameter error, 2 data error, 3 resource cap.
"""

import os
import sys
import argparse
import logging
import traceback
from dataclasses import asdict, fields
from typing import List, Optional

import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.aco_utils import ATTRACTIVENESS_MODES
from utils.bounds_utils import strengthened_model, tightness_fraction
from utils.config_utils import (
    ParamsError,
    configure_logging,
    get_threads,
    load_environment,
    merge_settings,
    read_config_file,
)
from utils.cuts_utils import cuts_to_text
from utils.data_utils import (
    format_timestamp,
    output_path,
    read_text_file,
    save_frame_to_csv,
    save_json_to_file,
    save_text_to_file,
)
from utils.formulation_utils import save_solution
from utils.instance_utils import (
    GenConfig,
    InstanceFormatError,
    InstanceValidationError,
    generate_instance,
    read_instance_file,
    write_instance_file,
)
from utils.oracle_utils import OracleCapError
from utils.pipeline_utils import (
    MODES,
    SOLVE_DEFAULTS,
    NoSolutionError,
    SolveOutcome,
    bounds_frame,
    compute_bounds,
    resolve_settings,
    solve_instance,
)
from utils.report_utils import RunReport, rins_gain_summary
from utils.solver_utils import LpConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CAP = 3

# generate flags -> GenConfig fields
GEN_FLAGS = {
    "terminals": "num_terminals",
    "bases": "num_bases",
    "levels": "num_levels",
    "area_side": "area_side",
    "path_loss_exponent": "path_loss_exponent",
    "p_max": "p_max",
    "shadowing_db": "shadowing_db",
    "delta": "delta",
    "noise": "noise",
    "revenue": "revenue",
    "coop_cost": "coop_cost",
    "seed": "seed",
}


class UsageError(Exception):
    pass


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(description="SPCAP solver toolkit")
    parser.add_argument("--log_level", "--log-level", dest="log_level", help="Log level (default: SPCAP_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", parser_class=CliArgumentParser)
    sub.required = True

    gen = sub.add_parser("generate", help="Generate a synthetic instance")
    gen.add_argument("--out", required=True, help="Instance file to write")
    gen.add_argument("--config", help="key=value file with generator settings")
    for flag, name in GEN_FLAGS.items():
        kind = type(getattr(GenConfig(), name))
        gen.add_argument(f"--{flag}", dest=flag, type=kind, help=f"GenConfig.{name}")

    bounds = sub.add_parser("bounds", help="Compute PI-bound and BM-bound")
    bounds.add_argument("instances", nargs="+", help="Instance files")
    bounds.add_argument("--max_rounds", "--max-rounds", dest="max_rounds", type=int, default=50)
    bounds.add_argument("--lp_backend", "--lp-backend", dest="lp_backend", choices=("auto", "simplex", "highs"), default="auto")
    bounds.add_argument("--dump_cuts", "--dump-cuts", dest="dump_cuts", help="Directory for per-instance cut dumps (<name>.cuts)")
    bounds.add_argument("--dump_lp", "--dump-lp", dest="dump_lp", help="Directory for per-instance LP dumps of the strengthened big-M model (<name>.lp)")
    bounds.add_argument("--out", choices=("csv", "table"), default="table")

    solve = sub.add_parser("solve", help="Solve an instance")
    solve.add_argument("instance", help="Instance file")
    solve.add_argument("--mode", choices=MODES)
    solve.add_argument("--config", help="key=value file mirroring the flags")
    solve.add_argument("--seed", type=int)
    solve.add_argument("--alpha", type=float)
    solve.add_argument("--ants", type=int)
    solve.add_argument("--psi", type=int)
    solve.add_argument("--epsilon", type=float)
    solve.add_argument("--rins_time", "--rins-time", dest="rins_time", type=float)
    solve.add_argument("--loops", type=int)
    solve.add_argument("--attractiveness", choices=ATTRACTIVENESS_MODES)
    solve.add_argument("--rins_nodes", "--rins-nodes", dest="rins_nodes", type=int)
    solve.add_argument("--time_budget", "--time-budget", dest="time_budget", type=float)
    solve.add_argument("--time_limit", "--time-limit", dest="time_limit", type=float, help="Exact mode time limit")
    solve.add_argument("--lp_backend", "--lp-backend", dest="lp_backend", choices=("auto", "simplex", "highs"))
    solve.add_argument("--timing", action="store_const", const=True, help="Record wall times in reports and logs")
    solve.add_argument("--out", choices=("csv", "table"), default="table")
    solve.add_argument("--report", help="Write the report row as CSV")
    solve.add_argument("--log_csv", "--log-csv", dest="log_csv", help="Write the hybrid run log as CSV")
    solve.add_argument("--solution", help="Write the best solution file")
    solve.add_argument("--summary", help="Write a JSON run summary with the mod-RINS gains")
    solve.add_argument("--use_supabase", action="store_true", help="Save the report row to Supabase")

    report = sub.add_parser("report", help="Merge report CSVs into one table")
    report.add_argument("reports", nargs="+", help="Report CSV files")
    report.add_argument("--out", choices=("csv", "table"), default="table")
    report.add_argument("--save", help="Write the merged report as CSV")
    return parser


def render(report: RunReport, out: str) -> str:
    return report.to_csv() if out == "csv" else report.to_table() + "\n"


def cmd_generate(args: argparse.Namespace) -> int:
    defaults = {name: getattr(GenConfig(), name) for name in (f.name for f in fields(GenConfig))}
    file_values = read_config_file(args.config) if args.config else {}
    cli_values = {GEN_FLAGS[flag]: getattr(args, flag) for flag in GEN_FLAGS}
    settings = merge_settings(defaults, file_values, cli_values)
    config = GenConfig(**settings)
    problems = config.validate()
    if problems:
        raise ParamsError("; ".join(problems))
    inst = generate_instance(config)
    write_instance_file(inst, args.out)
    print(args.out)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    lp_config = LpConfig(backend=args.lp_backend)
    frames, pairs = [], []
    for path in args.instances:
        inst = read_instance_file(path)
        pi, bm = compute_bounds(inst, max_rounds=args.max_rounds, lp_config=lp_config)
        if args.dump_cuts:
            save_text_to_file(cuts_to_text(inst, pi.cuts), output_path(args.dump_cuts, inst.name, ".cuts"))
        if args.dump_lp:
            save_text_to_file(strengthened_model(inst).to_lp_text(), output_path(args.dump_lp, inst.name, ".lp"))
        frames.append(bounds_frame(inst, pi, bm))
        pairs.append((pi.value, bm.value))

    if len(pairs) > 1:
        logger.info(f"PI-bound <= BM-bound on {tightness_fraction(pairs) * 100:.1f}% of {len(pairs)} instances")
    frame = pd.concat(frames, ignore_index=True)
    print(frame.to_csv(index=False) if args.out == "csv" else frame.to_string(index=False))
    return EXIT_OK


def run_summary(outcome: SolveOutcome) -> dict:
    """Row fields, bound violations and, for hybrid runs, the mod-RINS gain over each ant."""
    summary = {"mode": outcome.mode, **asdict(outcome.row), "coverage": outcome.row.coverage}
    summary["bound_violations"] = RunReport([outcome.row]).violations()
    if outcome.log is not None and not outcome.log.empty:
        ant_values = outcome.log["ant_value"].tolist()
        gains = (outcome.log["rins_value"] - outcome.log["ant_value"]).tolist()
        summary["iterations"] = int(outcome.log["iteration"].max())
        summary["rins"] = rins_gain_summary(gains, ant_values)
    return summary


def cmd_solve(args: argparse.Namespace) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    settings = resolve_settings(file_values, {key: getattr(args, key, None) for key in SOLVE_DEFAULTS})
    inst = read_instance_file(args.instance)
    outcome = solve_instance(inst, settings, threads=get_threads())

    report = RunReport([outcome.row])
    sys.stdout.write(render(report, args.out))
    for problem in report.violations():
        logger.warning(f"Bound violated: {problem}")
    if args.report:
        save_text_to_file(report.to_csv(), args.report)
    if args.log_csv and outcome.log is not None:
        save_frame_to_csv(outcome.log, args.log_csv)
    if args.solution:
        save_text_to_file(save_solution(inst, outcome.solution), args.solution)
    if args.summary:
        save_json_to_file(run_summary(outcome), args.summary)
    if args.use_supabase:
        from utils.supabase_utils import save_run_report

        meta = {"mode": outcome.mode, "seed": settings["seed"], "params": dict(settings), "timestamp": format_timestamp()}
        if not save_run_report(report, meta):
            logger.warning("Report row was not saved to Supabase")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    merged = RunReport()
    for path in args.reports:
        merged.extend(RunReport.from_csv(read_text_file(path)))
    for problem in merged.violations():
        logger.warning(f"Bound violated: {problem}")
    sys.stdout.write(render(merged, args.out))
    if args.save:
        save_text_to_file(merged.to_csv(), args.save)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "bounds": cmd_bounds,
    "solve": cmd_solve,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one CLI command and return its exit code."""
    load_environment()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    configure_logging(args.log_level)

    try:
        return COMMANDS[args.command](args)
    except (OracleCapError, NoSolutionError) as e:
        logger.error(str(e))
        return EXIT_CAP
    except ParamsError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_USAGE
    except (InstanceFormatError, InstanceValidationError) as e:
        logger.error(f"Invalid data: {e}")
        return EXIT_DATA
    except (OSError, ValueError) as e:
        logger.error(f"Cannot read input: {e}")
        return EXIT_DATA
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        traceback.print_exc()
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
