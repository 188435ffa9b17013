import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from utils.cuts_utils import GubCoverCut, add_cuts, enumerate_relaxed_gcis, separate_gci
from utils.formulation_utils import MipModel, VarKey, add_service_rows, build_bigM_model, build_terminal_model
from utils.instance_utils import Instance
from utils.solver_utils import LpConfig, LpSolution, LpStatus, solve_lp

logger = logging.getLogger(__name__)

MAX_ROUNDS = 50
TIGHTNESS_TOL = 1e-6


@dataclass
class BoundResult:
    """Relaxation bound with the point that attains it."""

    value: float
    point: Dict[VarKey, float]
    cut_count: int
    iterations: int
    status: LpStatus = LpStatus.OPTIMAL
    history: List[float] = field(default_factory=list)
    cuts: List[GubCoverCut] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == LpStatus.OPTIMAL


@lru_cache(maxsize=32)
def relaxed_gcis(inst: Instance) -> Tuple[GubCoverCut, ...]:
    return tuple(enumerate_relaxed_gcis(inst))


@lru_cache(maxsize=8)
def strengthened_model(inst: Instance) -> MipModel:
    """(big-M SPCAP) plus the service rows and every relaxed GCI. Shared; callers must not add rows."""
    model = build_bigM_model(inst)
    model.name = f"strongBM_{inst.name}"
    add_service_rows(model, inst)
    add_cuts(model, inst, relaxed_gcis(inst))
    return model


@lru_cache(maxsize=256)
def strengthened_terminal_model(inst: Instance, t: int) -> MipModel:
    model = build_terminal_model(inst, t)
    add_service_rows(model, inst)
    add_cuts(model, inst, [cut for cut in relaxed_gcis(inst) if cut.terminal == t])
    return model


def pi_bound(inst: Instance, max_rounds: int = MAX_ROUNDS, max_cluster_size: int = 2,
             max_interferers: int = 2, lp_config: Optional[LpConfig] = None) -> BoundResult:
    """PI-bound by a cutting-plane loop on the power-indexed formulation.

    Starts from the big-M skeleton without SIR rows plus the service rows and
    all relaxed GCIs, then alternates LP solves and GCI separation until
    separation finds nothing new or max_rounds is reached. The LP is always
    re-solved after the last batch of cuts, so the returned point satisfies
    every cut.

    Args:
        inst: Instance
        max_rounds: Separation rounds
        max_cluster_size: Serving set size enumerated by separation
        max_interferers: Interfering set size enumerated by separation
        lp_config: LP backend selection

    Returns:
        BoundResult: Final LP value and point, with the value after each round in history
    """
    model = build_bigM_model(inst, include_sir=False)
    add_service_rows(model, inst)
    cuts: List[GubCoverCut] = list(relaxed_gcis(inst))
    known = set(cuts)
    add_cuts(model, inst, cuts)

    sol = solve_lp(model, config=lp_config)
    iterations = 1
    history = [sol.objective]
    for round_no in range(1, max_rounds + 1):
        if not sol.optimal:
            break
        point = model.values_by_key(sol.values)
        new_cuts = [cut for cut in separate_gci(inst, point, max_cluster_size, max_interferers) if cut not in known]
        if not new_cuts:
            break
        known.update(new_cuts)
        cuts.extend(new_cuts)
        add_cuts(model, inst, new_cuts)
        sol = solve_lp(model, config=lp_config)
        iterations += 1
        history.append(sol.objective)
        logger.debug(f"PI round {round_no}: +{len(new_cuts)} cuts, bound {sol.objective:.6f}")
    else:
        logger.warning(f"PI-bound of {inst.name} stopped after {max_rounds} separation rounds")

    if not sol.optimal:
        logger.error(f"PI relaxation of {inst.name} ended with status {sol.status.value}")
    logger.info(f"PI-bound for {inst.name}: {sol.objective:.6f} ({len(cuts)} cuts, {iterations} LPs)")
    return BoundResult(
        value=sol.objective,
        point=model.values_by_key(sol.values),
        cut_count=len(cuts),
        iterations=iterations,
        status=sol.status,
        history=history,
        cuts=cuts,
    )


def strong_bm_solution(inst: Instance, fixings: Optional[Mapping[VarKey, int]] = None,
                       lp_config: Optional[LpConfig] = None) -> LpSolution:
    return solve_lp(strengthened_model(inst), fixings=fixings, config=lp_config)


def strong_bm_bound(inst: Instance, fixings: Optional[Mapping[VarKey, int]] = None,
                    lp_config: Optional[LpConfig] = None) -> BoundResult:
    """strongBM-bound: GCI-strengthened big-M relaxation under fixings.

    Empty fixings give the BM-bound. Contradictory fixings give status
    INFEASIBLE with value -inf.
    """
    sol = strong_bm_solution(inst, fixings, lp_config)
    value = sol.objective if sol.optimal else -np.inf
    return BoundResult(
        value=value,
        point=strengthened_model(inst).values_by_key(sol.values),
        cut_count=len(relaxed_gcis(inst)),
        iterations=1,
        status=sol.status,
    )


def bm_bound(inst: Instance, lp_config: Optional[LpConfig] = None) -> BoundResult:
    return strong_bm_bound(inst, {}, lp_config)


def terminal_solution(inst: Instance, t: int, fixings: Mapping[VarKey, int],
                      lp_config: Optional[LpConfig] = None) -> LpSolution:
    """Relaxation of terminal t's strengthened sub-model under fixings."""
    return solve_lp(strengthened_terminal_model(inst, t), fixings=fixings, config=lp_config)


def terminal_bound(inst: Instance, t: int, fixings: Mapping[VarKey, int],
                   lp_config: Optional[LpConfig] = None) -> float:
    """Terminal t's share of strongBM-bound; exact only when every z is fixed.

    With some z still open the terminals no longer share them, so the sum
    over terminals is an upper bound on strongBM-bound.
    """
    sol = terminal_solution(inst, t, fixings, lp_config)
    return sol.objective if sol.optimal else -np.inf


def tightness_fraction(pairs: Sequence[Tuple[float, float]], tol: float = TIGHTNESS_TOL) -> float:
    """Fraction of (pi, bm) pairs with pi <= bm + tol."""
    if not pairs:
        return float("nan")
    return sum(1 for pi, bm in pairs if pi <= bm + tol) / len(pairs)

