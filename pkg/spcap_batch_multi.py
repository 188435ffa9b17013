import os
import sys
import glob
import asyncio
import argparse
import logging
import traceback
from dataclasses import replace
from datetime import datetime
from typing import Any, Dict, List, Optional

sys.path.append(os.path.dirname(os.path.abspath(__file__)))
from utils.config_utils import configure_logging, get_output_dir, get_threads, load_environment, read_config_file
from utils.data_utils import format_timestamp, output_path, save_text_to_file
from utils.instance_utils import GenConfig, generate_instance, read_instance_file, write_instance_file
from utils.pipeline_utils import SOLVE_DEFAULTS, resolve_settings, solve_instance
from utils.report_utils import ReportRow, RunReport
from utils.supabase_utils import get_supabase_client, save_run_report

logger = logging.getLogger(__name__)

INSTANCE_SUFFIX = ".spcap"


class SpcapBatchRunner:
    """Solves a set of instance files, several at a time, into one report."""

    def __init__(self, output_dir: str, instance_paths: Optional[List[str]] = None,
                 instance_dir: Optional[str] = None, settings: Optional[Dict[str, Any]] = None,
                 threads: int = 1, use_supabase: bool = False, generate: int = 0,
                 gen_config: Optional[GenConfig] = None):
        self.output_dir = output_dir
        self.instance_paths = list(instance_paths or [])
        self.instance_dir = instance_dir
        self.settings = settings or resolve_settings({}, {})
        self.threads = threads
        self.generate = generate
        self.gen_config = gen_config or GenConfig()
        self.failures: Dict[str, str] = {}

        os.makedirs(self.output_dir, exist_ok=True)

        self.supabase = get_supabase_client() if use_supabase else None
        if use_supabase and not self.supabase:
            logger.warning("Supabase client unavailable. Database operations will be skipped.")

    async def get_instances(self) -> List[str]:
        """Instance files to solve: explicit paths, a directory scan, or freshly generated ones."""
        paths = list(self.instance_paths)
        if self.instance_dir:
            found = sorted(glob.glob(os.path.join(self.instance_dir, f"*{INSTANCE_SUFFIX}")))
            logger.info(f"Found {len(found)} instance files in {self.instance_dir}")
            paths.extend(found)
        if self.generate:
            paths.extend(await asyncio.to_thread(self.generate_instances))
        return paths

    def generate_instances(self) -> List[str]:
        """Write `generate` synthetic instances with consecutive seeds."""
        problems = self.gen_config.validate()
        if problems:
            raise ValueError("; ".join(problems))
        instance_dir = os.path.join(self.output_dir, "instances")
        paths = []
        for offset in range(self.generate):
            config = replace(self.gen_config, seed=self.gen_config.seed + offset)
            inst = generate_instance(config)
            path = os.path.join(instance_dir, f"{inst.name}{INSTANCE_SUFFIX}")
            write_instance_file(inst, path)
            paths.append(path)
        logger.info(f"Generated {len(paths)} instances in {instance_dir}")
        return paths

    def solve_file(self, path: str) -> ReportRow:
        """Solve one instance file; hybrid ants run serially inside a batch item."""
        inst = read_instance_file(path)
        outcome = solve_instance(inst, self.settings, threads=1)
        row = outcome.row
        logger.info(f"{inst.name}: objective {row.objective:.6f}, served {row.served_rins}/{row.num_terminals}, "
                    f"PI-bound {row.pi_bound}")
        return row

    async def solve_instance_file(self, path: str, semaphore: asyncio.Semaphore) -> Optional[ReportRow]:
        async with semaphore:
            logger.info(f"Solving instance: {path}")
            try:
                return await asyncio.to_thread(self.solve_file, path)
            except Exception as e:
                logger.error(f"Error solving instance {path}: {e}")
                logger.debug(traceback.format_exc())
                self.failures[path] = str(e)
                return None

    def save_report(self, report: RunReport) -> str:
        stamp = datetime.now().strftime("%Y%m%d_%H%M")
        path = output_path(self.output_dir, f"batch_{self.settings['mode']}", ".csv", stamp)
        save_text_to_file(report.to_csv(), path)
        return path

    async def run(self) -> int:
        """Run the batch and return an exit code."""
        try:
            paths = await self.get_instances()

            if not paths:
                logger.error("No instances to solve. Exiting.")
                return 1

            logger.info(f"Starting batch of {len(paths)} instances in {self.settings['mode']} mode "
                        f"with {self.threads} parallel runs")

            semaphore = asyncio.Semaphore(self.threads)
            rows = await asyncio.gather(*(self.solve_instance_file(path, semaphore) for path in paths))

            # rows follow input order
            report = RunReport([row for row in rows if row is not None])
            for problem in report.violations():
                logger.warning(f"Bound violated: {problem}")

            report_file = self.save_report(report) if report.rows else None

            if self.supabase and report.rows:
                meta = {"mode": self.settings["mode"], "seed": self.settings["seed"],
                        "params": dict(self.settings), "timestamp": format_timestamp()}
                save_run_report(report, meta, client=self.supabase)

            total = len(paths)
            succeeded = len(report.rows)
            logger.info("===== Batch Summary =====")
            logger.info(f"Total instances: {total}")
            logger.info(f"Successful: {succeeded}")
            logger.info(f"Failed: {total - succeeded}")
            logger.info(f"Success rate: {succeeded / total * 100:.1f}%")
            if report_file:
                logger.info(f"Report: {report_file}")
            for path, message in self.failures.items():
                logger.info(f"  {path}: {message}")

            return 0 if succeeded else 1
        except Exception as e:
            logger.error(f"Error in run method: {e}")
            traceback.print_exc()
            return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="SPCAP batch runner")
    parser.add_argument("instances", nargs="*", help="Instance files")
    parser.add_argument("--instance_dir", help=f"Directory scanned for *{INSTANCE_SUFFIX} files")
    parser.add_argument("--generate", type=int, default=0, help="Generate this many synthetic instances first")
    parser.add_argument("--terminals", type=int, help="Terminals per generated instance")
    parser.add_argument("--bases", type=int, help="Bases per generated instance")
    parser.add_argument("--levels", type=int, help="Power levels per generated instance")
    parser.add_argument("--gen_seed", type=int, default=0, help="Seed of the first generated instance")
    parser.add_argument("--config", help="key=value file with solve settings")
    parser.add_argument("--mode", choices=("hybrid", "exact", "oracle"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--loops", type=int)
    parser.add_argument("--rins_time", type=float)
    parser.add_argument("--time_limit", type=float)
    parser.add_argument("--timing", action="store_const", const=True)
    parser.add_argument("--output_dir", help="Output directory (default: SPCAP_OUTPUT_DIR)")
    parser.add_argument("--use_supabase", action="store_true", help="Save report rows to Supabase")
    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """Main function."""
    load_environment()
    configure_logging()
    args = build_parser().parse_args(argv)

    file_values = read_config_file(args.config) if args.config else {}
    cli_values = {key: getattr(args, key, None) for key in SOLVE_DEFAULTS}
    settings = resolve_settings(file_values, cli_values)

    gen_values = {"num_terminals": args.terminals, "num_bases": args.bases, "num_levels": args.levels}
    gen_config = GenConfig(seed=args.gen_seed, **{k: v for k, v in gen_values.items() if v is not None})

    runner = SpcapBatchRunner(
        output_dir=args.output_dir or get_output_dir(),
        instance_paths=args.instances,
        instance_dir=args.instance_dir,
        settings=settings,
        threads=get_threads(),
        use_supabase=args.use_supabase,
        generate=args.generate,
        gen_config=gen_config,
    )
    return await runner.run()


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
