"""
Hybrid exact-ACO construction for SPCAP.

An ant first fixes a power level (possibly 0 = off) for every base, then
decides cluster membership for every (terminal, base) pair, both in a fixed
visit order. Each move is a variable fixing, and its attractiveness is the
strongBM-bound after the fixing, or its split into per-terminal bounds. Trails start from the PI relaxation point and are reinforced with
the post-RINS value of each ant.
"""

import logging
import math
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from utils.bounds_utils import (
    BoundResult,
    pi_bound,
    strengthened_model,
    strengthened_terminal_model,
    strong_bm_bound,
    strong_bm_solution,
    terminal_solution,
)
from utils.config_utils import ParamsError
from utils.formulation_utils import (
    CandidateSolution,
    MipModel,
    VarKey,
    derive_full_solution,
    objective_value,
    y_key,
    z_key,
)
from utils.instance_utils import Instance
from utils.rins_utils import RinsConfig, mod_rins
from utils.solver_utils import LpConfig, LpSolution, reuse_optimum

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["iteration", "ant", "ant_value", "rins_value", "best_so_far", "elapsed_seconds"]
ATTRACTIVENESS_MODES = ("decomposed", "exact", "cached")
DEGENERATE_GAP = 1e-9
SANDWICH_TOL = 1e-6


class PowerKey(NamedTuple):
    base: int
    level: int


class ClusterKey(NamedTuple):
    terminal: int
    base: int
    into: bool


MoveKey = Union[PowerKey, ClusterKey]


def move_fixings(inst: Instance, move: MoveKey) -> Dict[VarKey, int]:
    """Translate a move into variable fixings."""
    if isinstance(move, PowerKey):
        return {z_key(move.base, l): int(l == move.level) for l in range(1, inst.num_levels + 1)}
    return {y_key(move.terminal, move.base): int(move.into)}


def solution_moves(inst: Instance, sol: CandidateSolution) -> List[MoveKey]:
    """The moves an ant would take to build this solution."""
    moves: List[MoveKey] = [PowerKey(b, level) for b, level in enumerate(sol.power_level)]
    for t in range(inst.num_terminals):
        for b in range(inst.num_bases):
            moves.append(ClusterKey(t, b, b in sol.cluster[t]))
    return moves


class PheromoneTable:
    """Trail per move key, with the creation values kept for deposits."""

    def __init__(self, initial: Mapping[MoveKey, float]):
        self.initial: Dict[MoveKey, float] = dict(initial)
        self.trail: Dict[MoveKey, float] = dict(initial)

    def __getitem__(self, key: MoveKey) -> float:
        return self.trail[key]

    def __len__(self) -> int:
        return len(self.trail)

    def keys(self):
        return self.trail.keys()

    def snapshot(self) -> "PheromoneTable":
        table = PheromoneTable(self.initial)
        table.trail = dict(self.trail)
        return table


@dataclass
class HybridParams:
    alpha: float = 0.5
    ants: Optional[int] = None
    psi: Optional[int] = None
    loops: int = 50
    epsilon: float = 0.01
    rins_time: float = 10.0
    attractiveness: str = "decomposed"
    seed: int = 0
    rins_nodes: Optional[int] = None
    time_budget: Optional[float] = None
    threads: int = 1
    timing: bool = False

    def resolved(self, inst: Instance) -> "HybridParams":
        """Fill the instance-dependent defaults m = ceil(|B|/2) and psi = m."""
        ants = self.ants if self.ants is not None else max(1, math.ceil(inst.num_bases / 2))
        psi = self.psi if self.psi is not None else ants
        return replace(self, ants=ants, psi=psi)

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ParamsError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.ants is not None and self.ants < 1:
            raise ParamsError(f"ants must be >= 1, got {self.ants}")
        if self.psi is not None and self.psi < 1:
            raise ParamsError(f"psi must be >= 1, got {self.psi}")
        if self.loops < 1:
            raise ParamsError(f"loops must be >= 1, got {self.loops}")
        if not 0.0 <= self.epsilon < 0.5:
            raise ParamsError(f"epsilon must be in [0, 0.5), got {self.epsilon}")
        if not self.rins_time > 0:
            raise ParamsError(f"rins_time must be > 0, got {self.rins_time}")
        if self.attractiveness not in ATTRACTIVENESS_MODES:
            raise ParamsError(f"attractiveness must be one of {ATTRACTIVENESS_MODES}, got '{self.attractiveness}'")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ParamsError(f"time_budget must be > 0, got {self.time_budget}")
        if self.threads < 1:
            raise ParamsError(f"threads must be >= 1, got {self.threads}")
        if self.rins_nodes is not None and self.rins_nodes < 1:
            raise ParamsError(f"rins_nodes must be >= 1, got {self.rins_nodes}")

    def rins_config(self, pi_point: Optional[Dict[VarKey, float]] = None) -> RinsConfig:
        return RinsConfig(epsilon=self.epsilon, time_limit=self.rins_time, pi_point=pi_point, node_limit=self.rins_nodes)


@dataclass
class ConstructionState:
    """Partial power state and partial cluster state of one ant."""

    power: Dict[int, int] = field(default_factory=dict)
    cluster: Dict[Tuple[int, int], bool] = field(default_factory=dict)

    def power_complete(self, inst: Instance) -> bool:
        return len(self.power) == inst.num_bases

    def cluster_complete(self, inst: Instance) -> bool:
        return len(self.cluster) == inst.num_terminals * inst.num_bases

    def apply(self, move: MoveKey) -> None:
        if isinstance(move, PowerKey):
            if move.base in self.power:
                raise ValueError(f"base {move.base} already configured")
            self.power[move.base] = move.level
        else:
            pair = (move.terminal, move.base)
            if pair in self.cluster:
                raise ValueError(f"pair {pair} already decided")
            self.cluster[pair] = move.into

    def fixings(self, inst: Instance) -> Dict[VarKey, int]:
        fixed: Dict[VarKey, int] = {}
        for b, level in self.power.items():
            fixed.update(move_fixings(inst, PowerKey(b, level)))
        for (t, b), into in self.cluster.items():
            fixed[y_key(t, b)] = int(into)
        return fixed

    def power_levels(self, inst: Instance) -> Tuple[int, ...]:
        return tuple(self.power[b] for b in range(inst.num_bases))


# ---------------------------------------------------------------------------
# Trails, moves and probabilities
# ---------------------------------------------------------------------------

def init_pheromones(inst: Instance, pi_point: Mapping[VarKey, float]) -> PheromoneTable:
    initial: Dict[MoveKey, float] = {}
    for b in range(inst.num_bases):
        total = 0.0
        for l in range(1, inst.num_levels + 1):
            z = min(1.0, max(0.0, pi_point.get(z_key(b, l), 0.0)))
            initial[PowerKey(b, l)] = z
            total += z
        initial[PowerKey(b, 0)] = min(1.0, max(0.0, 1.0 - total))
    for t in range(inst.num_terminals):
        for b in range(inst.num_bases):
            y = min(1.0, max(0.0, pi_point.get(y_key(t, b), 0.0)))
            initial[ClusterKey(t, b, True)] = y
            initial[ClusterKey(t, b, False)] = 1.0 - y
    return PheromoneTable(initial)


def power_visit_order(inst: Instance) -> List[int]:
    """Bases by descending revenue-weighted attenuation over all terminals."""
    weight = np.asarray(inst.revenue, dtype=float) @ inst.atten_matrix
    return sorted(range(inst.num_bases), key=lambda b: (-weight[b], b))


def cluster_visit_order(inst: Instance) -> List[Tuple[int, int]]:
    """Terminals by descending revenue, then bases by descending attenuation."""
    order = []
    for t in sorted(range(inst.num_terminals), key=lambda t: (-inst.revenue[t], t)):
        for b in sorted(range(inst.num_bases), key=lambda b: (-inst.atten[t][b], b)):
            order.append((t, b))
    return order


def feasible_moves(inst: Instance, state: ConstructionState) -> List[MoveKey]:
    """Moves still open in visit order: power moves while any base is unconfigured, then cluster moves."""
    if not state.power_complete(inst):
        return [
            PowerKey(b, level)
            for b in power_visit_order(inst) if b not in state.power
            for level in range(inst.num_levels + 1)
        ]
    moves: List[MoveKey] = []
    for t, b in cluster_visit_order(inst):
        if (t, b) not in state.cluster:
            moves.append(ClusterKey(t, b, True))
            moves.append(ClusterKey(t, b, False))
    return moves


def normalize_attractiveness(raw: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Min-max normalize finite values to [0, 1]; -inf marks an excluded move.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Normalized values and the allowed mask
    """
    raw = np.asarray(raw, dtype=float)
    allowed = np.isfinite(raw)
    eta = np.zeros(raw.size)
    if allowed.any():
        lo, hi = raw[allowed].min(), raw[allowed].max()
        if hi - lo < 1e-12:
            eta[allowed] = 1.0
        else:
            eta[allowed] = (raw[allowed] - lo) / (hi - lo)
    return eta, allowed


def move_probabilities(alpha: float, tau: Sequence[float], eta: Sequence[float],
                       allowed: Optional[Sequence[bool]] = None) -> np.ndarray:
    """p_f proportional to alpha * tau_f + (1 - alpha) * eta_f over allowed moves."""
    tau = np.asarray(tau, dtype=float)
    eta = np.asarray(eta, dtype=float)
    allowed = np.ones(tau.size, dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    score = np.where(allowed, alpha * tau + (1.0 - alpha) * eta, 0.0)
    score = np.maximum(score, 0.0)
    total = score.sum()
    if total <= 0.0:
        if not allowed.any():
            allowed = np.ones(tau.size, dtype=bool)
        score = allowed.astype(float)
        total = score.sum()
    probs = score / total
    return probs / probs.sum()


def _value(sol: LpSolution) -> float:
    return sol.objective if sol.optimal else -np.inf


TerminalKey = Tuple[Tuple[Tuple[int, int], ...], int, FrozenSet[Tuple[int, bool]]]


class AttractivenessEvaluator:
    """Raw attractiveness of candidate moves, shared by the ants of a run.

    decomposed: sum over terminals of the strengthened per-terminal relaxation
        after the fixing. Equals strongBM-bound once every power is fixed and
        bounds it from above before that.
    exact: strongBM-bound of the whole model after each power fixing.
    cached: one strongBM LP per state; a candidate scores the relaxed value
        of the variable it fixes.

    Cluster moves are scored alike in decomposed and exact mode: with every
    power fixed the relaxation splits by terminal, so only the moved
    terminal's LP changes. Relaxations are kept per state, and a state whose
    last fixing leaves the optimum of its parent state feasible takes that
    optimum over without a solve.
    """

    def __init__(self, inst: Instance, mode: str = "decomposed", lp_config: Optional[LpConfig] = None):
        if mode not in ATTRACTIVENESS_MODES:
            raise ParamsError(f"unknown attractiveness mode '{mode}'")
        self.inst = inst
        self.mode = mode
        self.lp_config = lp_config
        self.lp_solves = 0
        self.reused = 0
        self._power_rank = {b: rank for rank, b in enumerate(power_visit_order(inst))}
        self._pair_rank = {pair: rank for rank, pair in enumerate(cluster_visit_order(inst))}
        self._terminal_cache: Dict[TerminalKey, LpSolution] = {}
        self._coupled_cache: Dict[Tuple[Tuple[int, int], ...], LpSolution] = {}

    def raw_values(self, state: ConstructionState, moves: Sequence[MoveKey]) -> np.ndarray:
        if self.mode == "cached":
            return self._cached(state, moves)
        if not state.power_complete(self.inst):
            return np.array([self._power_value(state, move) for move in moves])
        return self._cluster_values(state, moves)

    def _power_parent(self, power: Tuple[Tuple[int, int], ...]) -> Tuple[Tuple[Tuple[int, int], ...], PowerKey]:
        """Drop the base set last in visit order; power states are sorted (base, level) tuples."""
        last = max(power, key=lambda item: self._power_rank[item[0]])
        return tuple(item for item in power if item != last), PowerKey(*last)

    def _solved(self, model: MipModel, parent: Optional[LpSolution], extra: Mapping[VarKey, int],
                solve: Callable[[], LpSolution]) -> LpSolution:
        sol = reuse_optimum(model, parent, extra) if parent is not None else None
        if sol is not None:
            self.reused += 1
            return sol
        self.lp_solves += 1
        return solve()

    def _fixings(self, power: Tuple[Tuple[int, int], ...], t: Optional[int] = None,
                 decided: Iterable[Tuple[int, bool]] = ()) -> Dict[VarKey, int]:
        fixings: Dict[VarKey, int] = {}
        for b, level in power:
            fixings.update(move_fixings(self.inst, PowerKey(b, level)))
        for b, into in decided:
            fixings[y_key(t, b)] = int(into)
        return fixings

    def terminal_relaxation(self, power: Tuple[Tuple[int, int], ...], t: int,
                            decided: FrozenSet[Tuple[int, bool]] = frozenset()) -> LpSolution:
        """Terminal t's strengthened relaxation in a state, solved at most once."""
        key = (power, t, decided)
        sol = self._terminal_cache.get(key)
        if sol is not None:
            return sol
        if decided:
            last = max(decided, key=lambda item: self._pair_rank[(t, item[0])])
            parent = self.terminal_relaxation(power, t, decided - {last})
            extra = {y_key(t, last[0]): int(last[1])}
        elif power:
            parent_power, move = self._power_parent(power)
            parent = self.terminal_relaxation(parent_power, t)
            extra = move_fixings(self.inst, move)
        else:
            parent, extra = None, {}
        sol = self._solved(
            strengthened_terminal_model(self.inst, t), parent, extra,
            lambda: terminal_solution(self.inst, t, self._fixings(power, t, decided), self.lp_config),
        )
        self._terminal_cache[key] = sol
        return sol

    def coupled_relaxation(self, power: Tuple[Tuple[int, int], ...]) -> LpSolution:
        """strongBM relaxation of a power state, solved at most once."""
        sol = self._coupled_cache.get(power)
        if sol is not None:
            return sol
        if power:
            parent_power, move = self._power_parent(power)
            parent = self.coupled_relaxation(parent_power)
            extra = move_fixings(self.inst, move)
        else:
            parent, extra = None, {}
        sol = self._solved(
            strengthened_model(self.inst), parent, extra,
            lambda: strong_bm_solution(self.inst, self._fixings(power), self.lp_config),
        )
        self._coupled_cache[power] = sol
        return sol

    def _power_value(self, state: ConstructionState, move: PowerKey) -> float:
        power = tuple(sorted({**state.power, move.base: move.level}.items()))
        if self.mode == "exact":
            return _value(self.coupled_relaxation(power))
        return sum(_value(self.terminal_relaxation(power, t)) for t in range(self.inst.num_terminals))

    def _cluster_values(self, state: ConstructionState, moves: Sequence[ClusterKey]) -> np.ndarray:
        power = tuple(sorted(state.power.items()))
        decided: Dict[int, set] = {t: set() for t in range(self.inst.num_terminals)}
        for (t, b), into in state.cluster.items():
            decided[t].add((b, into))
        current = [_value(self.terminal_relaxation(power, t, frozenset(decided[t]))) for t in decided]
        values = []
        for move in moves:
            t = move.terminal
            moved = self.terminal_relaxation(power, t, frozenset(decided[t] | {(move.base, move.into)}))
            values.append(sum(current[:t]) + sum(current[t + 1:]) + _value(moved))
        return np.array(values)

    def _cached(self, state: ConstructionState, moves: Sequence[MoveKey]) -> np.ndarray:
        self.lp_solves += 1
        bound = strong_bm_bound(self.inst, state.fixings(self.inst), self.lp_config)
        if not bound.feasible:
            return np.full(len(moves), -np.inf)
        point = bound.point
        values = []
        for move in moves:
            if isinstance(move, PowerKey):
                levels = range(1, self.inst.num_levels + 1)
                if move.level == 0:
                    values.append(max(0.0, 1.0 - sum(point[z_key(move.base, l)] for l in levels)))
                else:
                    values.append(point[z_key(move.base, move.level)])
            else:
                y = point[y_key(move.terminal, move.base)]
                values.append(y if move.into else 1.0 - y)
        return np.array(values)


def construct_solution(inst: Instance, pheromones: PheromoneTable, params: HybridParams,
                       rng: np.random.Generator, evaluator: Optional[AttractivenessEvaluator] = None,
                       lp_config: Optional[LpConfig] = None) -> CandidateSolution:
    """Build one solution: every power level first, then every cluster decision.

    The next unconfigured base in power visit order is set by its |L|+1 level
    moves, then the next undecided (terminal, base) pair in cluster visit
    order by its In/Out pair of moves.
    """
    evaluator = evaluator or AttractivenessEvaluator(inst, params.attractiveness, lp_config)
    state = ConstructionState()
    while True:
        moves = feasible_moves(inst, state)
        if not moves:
            break
        candidates = moves[:inst.num_levels + 1] if not state.power_complete(inst) else moves[:2]
        tau = [pheromones[move] for move in candidates]
        if params.alpha >= 1.0:
            eta = np.zeros(len(candidates))
            allowed = np.ones(len(candidates), dtype=bool)
        else:
            eta, allowed = normalize_attractiveness(evaluator.raw_values(state, candidates))
        probs = move_probabilities(params.alpha, tau, eta, allowed)
        choice = candidates[int(rng.choice(len(candidates), p=probs))]
        logger.debug(f"Ant move {choice} with p={probs.max():.3f}")
        state.apply(choice)

    cluster = [{b for b in range(inst.num_bases) if state.cluster[(t, b)]} for t in range(inst.num_terminals)]
    return derive_full_solution(inst, state.power_levels(inst), cluster)


# ---------------------------------------------------------------------------
# Pheromone update
# ---------------------------------------------------------------------------

class MovingAverage:
    """Mean of the last psi solution values."""

    def __init__(self, psi: int):
        self.values = deque(maxlen=psi)

    def __len__(self) -> int:
        return len(self.values)

    def extend(self, values: Iterable[float]) -> None:
        self.values.extend(values)

    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")


def update_pheromones(table: PheromoneTable, batch: Sequence[Tuple[Iterable[MoveKey], float]],
                      b_rel: float, moving_avg: MovingAverage) -> float:
    """Reinforce the moves of one batch of ants.

    Each move used by ant k receives tau0 * (1 - (b_rel - z_k) / (b_rel - z_avg)).
    Deposits are summed per move before the trail is floored at 0. The first
    batch, with no history yet, uses its own mean as z_avg.

    Args:
        table: Trails, updated in place
        batch: (moves, value) per ant
        b_rel: Relaxation bound the values are measured against
        moving_avg: Last psi values; absorbs this batch afterwards

    Returns:
        float: The z_avg used
    """
    values = [value for _, value in batch]
    z_avg = moving_avg.mean() if len(moving_avg) else float(np.mean(values))
    gap = b_rel - z_avg
    if gap >= DEGENERATE_GAP:
        delta: Dict[MoveKey, float] = {}
        for moves, value in batch:
            factor = 1.0 - (b_rel - value) / gap
            for key in moves:
                delta[key] = delta.get(key, 0.0) + table.initial[key] * factor
        for key, amount in delta.items():
            table.trail[key] = max(0.0, table.trail[key] + amount)
    else:
        logger.debug(f"Degenerate pheromone update (bound {b_rel:.6f}, average {z_avg:.6f}); no deposit")
    moving_avg.extend(values)
    return z_avg


# ---------------------------------------------------------------------------
# Algorithm driver
# ---------------------------------------------------------------------------

@dataclass
class AntOutcome:
    ant: int
    ant_solution: CandidateSolution
    ant_value: float
    rins_solution: CandidateSolution
    rins_value: float


@dataclass
class HybridResult:
    best: CandidateSolution
    best_value: float
    best_ant: CandidateSolution
    best_ant_value: float
    pi_value: float
    log: List[Dict[str, Any]]
    iterations: int
    stopped_early: bool = False
    elapsed: float = 0.0
    bound_violation: Optional[str] = None

    def log_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.log, columns=LOG_COLUMNS)

    @property
    def rins_gains(self) -> List[float]:
        return [row["rins_value"] - row["ant_value"] for row in self.log]


def _run_ant(inst: Instance, table: PheromoneTable, params: HybridParams, iteration: int, ant: int,
             pi_point: Dict[VarKey, float], evaluator: AttractivenessEvaluator,
             lp_config: Optional[LpConfig]) -> AntOutcome:
    rng = np.random.default_rng([params.seed, iteration, ant])
    sol = construct_solution(inst, table, params, rng, evaluator=evaluator, lp_config=lp_config)
    value = objective_value(inst, sol)
    refined = mod_rins(inst, sol, pi_point, params.rins_config(), lp_config)
    refined_value = objective_value(inst, refined)
    if refined_value < value - 1e-9:
        raise AssertionError(f"mod_rins lowered the objective: {value} -> {refined_value}")
    return AntOutcome(ant, sol, value, refined, refined_value)


def run_hybrid(inst: Instance, params: Optional[HybridParams] = None, pi_result: Optional[BoundResult] = None,
               lp_config: Optional[LpConfig] = None) -> HybridResult:
    """Run the hybrid exact-ACO with mod-RINS refinement.

    Args:
        inst: Instance
        params: Algorithm parameters; ants and psi default from |B|
        pi_result: Precomputed PI-bound, computed here when missing
        lp_config: LP backend selection

    Returns:
        HybridResult: Best solution, best pre-RINS ant and the run log
    """
    params = (params or HybridParams()).resolved(inst)
    params.validate()
    start = time.time()

    pi = pi_result or pi_bound(inst, lp_config=lp_config)
    table = init_pheromones(inst, pi.point)
    moving_avg = MovingAverage(params.psi)
    evaluator = AttractivenessEvaluator(inst, params.attractiveness, lp_config)
    logger.info(
        f"Hybrid run on {inst.name}: alpha={params.alpha}, ants={params.ants}, psi={params.psi}, "
        f"loops={params.loops}, eps={params.epsilon}, T={params.rins_time}s, seed={params.seed}"
    )

    best: Optional[CandidateSolution] = None
    best_value = -np.inf
    best_ant: Optional[CandidateSolution] = None
    best_ant_value = -np.inf
    log: List[Dict[str, Any]] = []
    stopped_early = False
    completed = 0
    executor = ThreadPoolExecutor(max_workers=params.threads) if params.threads > 1 else None
    try:
        for iteration in range(1, params.loops + 1):
            if iteration > 1 and params.time_budget is not None and time.time() - start > params.time_budget:
                logger.warning(f"Time budget of {params.time_budget}s reached after {completed} iterations")
                stopped_early = True
                break
            snapshot = table.snapshot()
            ant_ids = range(1, params.ants + 1)
            if executor is not None:
                futures = [executor.submit(_run_ant, inst, snapshot, params, iteration, ant, pi.point,
                                           evaluator, lp_config)
                           for ant in ant_ids]
                outcomes = [future.result() for future in futures]
            else:
                outcomes = [_run_ant(inst, snapshot, params, iteration, ant, pi.point, evaluator, lp_config)
                            for ant in ant_ids]

            for outcome in outcomes:
                if outcome.ant_value > best_ant_value:
                    best_ant, best_ant_value = outcome.ant_solution, outcome.ant_value
                if outcome.rins_value > best_value:
                    best, best_value = outcome.rins_solution, outcome.rins_value
                log.append({
                    "iteration": iteration,
                    "ant": outcome.ant,
                    "ant_value": outcome.ant_value,
                    "rins_value": outcome.rins_value,
                    "best_so_far": best_value,
                    "elapsed_seconds": round(time.time() - start, 3) if params.timing else None,
                })

            update_pheromones(
                table,
                [(solution_moves(inst, o.rins_solution), o.rins_value) for o in outcomes],
                pi.value,
                moving_avg,
            )
            completed = iteration
            logger.info(f"Iteration {iteration}/{params.loops}: best {best_value:.6f}")
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    bound_violation = None
    if best_value > pi.value + SANDWICH_TOL:
        bound_violation = f"best value {best_value:.6f} exceeds PI-bound {pi.value:.6f}"
        logger.error(f"Hybrid run on {inst.name}: {bound_violation}")
    elapsed = time.time() - start
    logger.info(f"Hybrid run on {inst.name} finished: best {best_value:.6f}, PI-bound {pi.value:.6f}, {elapsed:.2f}s")
    return HybridResult(
        best=best,
        best_value=best_value,
        best_ant=best_ant,
        best_ant_value=best_ant_value,
        pi_value=pi.value,
        log=log,
        iterations=completed,
        stopped_early=stopped_early,
        elapsed=elapsed,
        bound_violation=bound_violation,
    )
