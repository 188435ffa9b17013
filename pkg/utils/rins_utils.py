import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

from utils.bounds_utils import strengthened_model
from utils.config_utils import ParamsError
from utils.formulation_utils import (
    CandidateSolution,
    MipModel,
    VarKey,
    check_feasibility,
    objective_value,
    solution_from_values,
)
from utils.instance_utils import Instance
from utils.solver_utils import BnbConfig, LpConfig, MipStatus, solve_mip

logger = logging.getLogger(__name__)

# Incumbents must beat the ant solution by at least this much.
MIN_IMPROVEMENT = 1e-6


@dataclass
class RinsConfig:
    epsilon: float = 0.01
    time_limit: float = 10.0
    pi_point: Optional[Dict[VarKey, float]] = None
    node_limit: Optional[int] = None

    def validate(self) -> None:
        if not 0.0 <= self.epsilon < 0.5:
            raise ParamsError(f"epsilon must be in [0, 0.5), got {self.epsilon}")
        if not self.time_limit > 0:
            raise ParamsError(f"rins time limit must be > 0, got {self.time_limit}")
        if self.node_limit is not None and self.node_limit < 1:
            raise ParamsError(f"rins node limit must be >= 1, got {self.node_limit}")


def rins_fixings(model: MipModel, ant_point: Mapping[VarKey, int], pi_point: Mapping[VarKey, float],
                 epsilon: float) -> Dict[VarKey, int]:
    """Variables where the ant solution and the relaxation agree within epsilon.

    Args:
        model: Model whose variables are considered
        ant_point: Integral values of the ant solution
        pi_point: Fractional relaxation values (missing keys read as 0)
        epsilon: Agreement tolerance, 0 gives classic RINS

    Returns:
        Dict[VarKey, int]: Fixings to the ant's value
    """
    fixings: Dict[VarKey, int] = {}
    for key in model.var_keys:
        ant_value = ant_point[key]
        relaxed = pi_point.get(key, 0.0)
        if ant_value == 0 and relaxed <= epsilon:
            fixings[key] = 0
        elif ant_value == 1 and relaxed >= 1.0 - epsilon:
            fixings[key] = 1
    return fixings


def mod_rins(inst: Instance, ant_solution: CandidateSolution, pi_point: Optional[Mapping[VarKey, float]],
             config: RinsConfig, lp_config: Optional[LpConfig] = None) -> CandidateSolution:
    """Refine an ant solution by an exact search around it.

    Returns the sub-MIP incumbent when it strictly improves the ant's
    objective, otherwise the ant solution unchanged.
    """
    config.validate()
    reference = pi_point if pi_point is not None else config.pi_point
    if reference is None:
        raise ParamsError("mod_rins needs a reference relaxation point")

    model = strengthened_model(inst)
    ant_obj = objective_value(inst, ant_solution)
    fixings = rins_fixings(model, ant_solution.to_point(inst), reference, config.epsilon)
    logger.debug(f"RINS fixes {len(fixings)}/{model.num_vars} variables (eps={config.epsilon})")

    result = solve_mip(
        model,
        BnbConfig(
            time_limit=config.time_limit,
            cutoff=ant_obj + MIN_IMPROVEMENT,
            fixings=fixings,
            node_limit=config.node_limit,
        ),
        lp_config,
    )
    if result.status == MipStatus.TIME_LIMIT:
        logger.info(f"RINS sub-MIP hit its {config.time_limit}s limit after {result.nodes} nodes")
    if not result.has_incumbent:
        return ant_solution

    improved = solution_from_values(inst, model, result.values)
    improved_obj = objective_value(inst, improved)
    if improved_obj < ant_obj + MIN_IMPROVEMENT or not check_feasibility(inst, improved).ok:
        return ant_solution
    logger.debug(f"RINS improved ant solution {ant_obj:.6f} -> {improved_obj:.6f}")
    return improved
