"""
Exhaustive optimum for tiny instances.

Terminal t's SIR depends only on the power vector and t's own cluster, so
for a fixed power vector every terminal is optimized independently: its
contribution is max(0, max over served clusters S of r_t - c_t (|S| - 1)).

Only powered-on bases are considered for clusters. An off base adds no
signal and costs c_t >= 0, so dropping it from any cluster never lowers
the objective and never changes whether t is served.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from utils.formulation_utils import CandidateSolution, TOL_FEAS, derive_full_solution, is_served, objective_value
from utils.instance_utils import Instance

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10 ** 6
MAX_BASES = 15


class OracleCapError(RuntimeError):
    """Raised when an instance is too large to enumerate."""

    def __init__(self, inst: Instance, cap: int, max_bases: int):
        self.power_vectors = (inst.num_levels + 1) ** inst.num_bases
        super().__init__(
            f"oracle refuses {inst.name}: |B|={inst.num_bases}, |L|={inst.num_levels} gives "
            f"{self.power_vectors} power vectors (cap {cap}, max |B| {max_bases})"
        )


@dataclass
class OracleResult:
    objective: float
    solution: CandidateSolution
    power_vectors: int


def brute_force_opt(inst: Instance, cap: int = DEFAULT_CAP, max_bases: int = MAX_BASES) -> OracleResult:
    """Enumerate every power vector and pick the best per-terminal clusters.

    Args:
        inst: Instance with (|L|+1)^|B| <= cap and |B| <= max_bases
        cap: Largest number of power vectors enumerated
        max_bases: Largest |B| accepted

    Returns:
        OracleResult: Optimal objective, one optimal solution and the enumeration count
    """
    B, L = inst.num_bases, inst.num_levels
    if B > max_bases or (L + 1) ** B > cap:
        raise OracleCapError(inst, cap, max_bases)

    # Every subset of bases as a boolean row, empty set excluded.
    masks = np.array(list(itertools.product((False, True), repeat=B))[1:], dtype=bool).reshape(-1, B)
    sizes = masks.sum(axis=1)
    A = inst.atten_matrix
    delta = inst.delta_vector[:, None]
    revenue = np.asarray(inst.revenue)[:, None]
    cost = np.asarray(inst.coop_cost)[:, None]
    gain = revenue - cost * (sizes[None, :] - 1)

    best_obj = -np.inf
    best_levels = None
    best_clusters = None
    count = 0
    for levels in itertools.product(range(L + 1), repeat=B):
        count += 1
        powers = inst.powers(levels)
        on = powers > 0
        allowed = ~(masks & ~on[None, :]).any(axis=1)
        if not allowed.any():
            total = 0.0
            clusters = [frozenset()] * inst.num_terminals
        else:
            sub = masks[allowed]
            received = A * powers[None, :]
            useful = received @ sub.T
            interf = received @ (~sub).T
            margin = useful - delta * interf - delta * inst.noise
            tol = TOL_FEAS * np.maximum(useful + delta * interf, delta * inst.noise)
            value = np.where(margin >= -tol, gain[:, allowed], -np.inf)
            pick = np.argmax(value, axis=1)
            best = value[np.arange(inst.num_terminals), pick]
            take = best > 0
            total = float(np.sum(best[take]))
            clusters = [
                frozenset(np.flatnonzero(sub[pick[t]]).tolist()) if take[t] else frozenset()
                for t in range(inst.num_terminals)
            ]
        if total > best_obj + 1e-12:
            best_obj, best_levels, best_clusters = total, levels, clusters

    solution = derive_full_solution(inst, best_levels, best_clusters)
    objective = objective_value(inst, solution)
    logger.info(f"Oracle optimum for {inst.name}: {objective:.6f} over {count} power vectors")
    return OracleResult(objective=objective, solution=solution, power_vectors=count)


def best_terminal_contribution(inst: Instance, power_level, t: int) -> float:
    """Recompute one terminal's best contribution for a fixed power vector."""
    powers = inst.powers(power_level)
    on = [b for b in range(inst.num_bases) if powers[b] > 0]
    best = 0.0
    for size in range(1, len(on) + 1):
        for cluster in itertools.combinations(on, size):
            if is_served(inst, powers, cluster, t):
                best = max(best, inst.revenue[t] - inst.coop_cost[t] * (size - 1))
    return best
