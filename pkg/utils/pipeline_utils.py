import time
import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional

import pandas as pd

from utils.aco_utils import HybridParams, run_hybrid
from utils.bounds_utils import BoundResult, bm_bound, pi_bound, strengthened_model
from utils.config_utils import ParamsError, merge_settings
from utils.formulation_utils import CandidateSolution, objective_value, solution_from_values
from utils.instance_utils import Instance
from utils.oracle_utils import brute_force_opt
from utils.report_utils import ReportRow, hybrid_row, solution_row
from utils.solver_utils import BnbConfig, LpConfig, solve_mip

logger = logging.getLogger(__name__)

MODES = ("hybrid", "exact", "oracle")

SOLVE_DEFAULTS: Dict[str, Any] = {
    "mode": "hybrid",
    "alpha": 0.5,
    "ants": None,
    "psi": None,
    "epsilon": 0.01,
    "rins_time": 10.0,
    "loops": 50,
    "seed": 0,
    "attractiveness": "decomposed",
    "rins_nodes": None,
    "time_budget": None,
    "time_limit": 600.0,
    "lp_backend": "auto",
    "timing": False,
}


class NoSolutionError(RuntimeError):
    """Raised when the exact solver stops without any feasible solution."""


@dataclass
class SolveOutcome:
    mode: str
    row: ReportRow
    solution: CandidateSolution
    log: Optional[pd.DataFrame] = None


def resolve_settings(file_values: Mapping[str, str], cli_values: Mapping[str, Any]) -> Dict[str, Any]:
    """Merge solve settings (CLI > file > defaults) and check the mode."""
    settings = merge_settings(SOLVE_DEFAULTS, file_values, cli_values)
    if settings["mode"] not in MODES:
        raise ParamsError(f"unknown mode '{settings['mode']}'")
    return settings


def hybrid_params(settings: Mapping[str, Any], threads: int = 1) -> HybridParams:
    params = HybridParams(
        alpha=settings["alpha"],
        ants=settings["ants"],
        psi=settings["psi"],
        loops=settings["loops"],
        epsilon=settings["epsilon"],
        rins_time=settings["rins_time"],
        attractiveness=settings["attractiveness"],
        seed=settings["seed"],
        rins_nodes=settings["rins_nodes"],
        time_budget=settings["time_budget"],
        threads=threads,
        timing=settings["timing"],
    )
    params.validate()
    return params


def solve_instance(inst: Instance, settings: Mapping[str, Any], threads: int = 1) -> SolveOutcome:
    """Solve one instance in the requested mode and build its report row.

    Args:
        inst: Instance to solve
        settings: Resolved solve settings (see SOLVE_DEFAULTS)
        threads: Ant parallelism for hybrid mode

    Returns:
        SolveOutcome: Report row, best solution and, for hybrid runs, the run log
    """
    lp_config = LpConfig(backend=settings["lp_backend"])
    lp_config.validate()
    mode = settings["mode"]
    start = time.time()

    def wall() -> Optional[float]:
        return round(time.time() - start, 3) if settings["timing"] else None

    if mode == "hybrid":
        params = hybrid_params(settings, threads)
        result = run_hybrid(inst, params, lp_config=lp_config)
        return SolveOutcome(mode, hybrid_row(inst, result, wall()), result.best, result.log_frame())

    if mode == "exact":
        model = strengthened_model(inst)
        mip = solve_mip(model, BnbConfig(time_limit=settings["time_limit"]), lp_config)
        logger.info(f"Exact solve of {inst.name} finished with status {mip.status.value}, bound {mip.best_bound:.6f}")
        if not mip.has_incumbent:
            raise NoSolutionError(f"exact solve of {inst.name} found no solution ({mip.status.value})")
        best = solution_from_values(inst, model, mip.values)
        pi = pi_bound(inst, lp_config=lp_config)
        return SolveOutcome(mode, solution_row(inst, best, objective_value(inst, best), pi.value, wall()), best)

    oracle = brute_force_opt(inst)
    pi = pi_bound(inst, lp_config=lp_config)
    return SolveOutcome(mode, solution_row(inst, oracle.solution, oracle.objective, pi.value, wall()), oracle.solution)


def bounds_frame(inst: Instance, pi: BoundResult, bm: BoundResult) -> pd.DataFrame:
    """One-row frame comparing PI-bound and BM-bound for an instance."""
    return pd.DataFrame([{
        "ID": inst.name,
        "|T|": inst.num_terminals,
        "|B|": inst.num_bases,
        "PI-bound": pi.value,
        "BM-bound": bm.value,
        "Cuts": pi.cut_count,
        "Rounds": pi.iterations,
        "PI<=BM": pi.value <= bm.value + 1e-6,
    }])


def compute_bounds(inst: Instance, max_rounds: int = 50, lp_config: Optional[LpConfig] = None):
    """PI-bound and BM-bound of an instance as (pi, bm)."""
    pi = pi_bound(inst, max_rounds=max_rounds, lp_config=lp_config)
    bm = bm_bound(inst, lp_config=lp_config)
    if pi.value > bm.value + 1e-6:
        logger.warning(f"{inst.name}: PI-bound {pi.value} exceeds BM-bound {bm.value}")
    return pi, bm
