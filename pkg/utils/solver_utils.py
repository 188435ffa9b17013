"""
LP and binary MIP engine for desk-scale SPCAP models.

Two LP backends share one entry point:
    simplex  dense bounded-variable primal simplex (two phases, Dantzig
             pricing with a Bland fallback once pivots stall)
    highs    scipy.optimize.linprog with the HiGHS solver
"auto" picks the dense simplex while the reduced tableau stays under
LpConfig.max_dense_entries and HiGHS above it.

Before any LP solve, rows with no slack left pin their variables at a bound,
fixed variables are substituted out and rows that can no longer bind are
dropped. Branch-and-bound nodes additionally propagate fixings through the
rows.
"""

import heapq
import logging
import time
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sps
from scipy.optimize import linprog

from utils.config_utils import ParamsError
from utils.formulation_utils import MipModel, StandardForm, VarKey

logger = logging.getLogger(__name__)

TOL_LP = 1e-7
TOL_PIVOT = 1e-9
TOL_COST = 1e-9
TOL_INT = 1e-6
TOL_TIGHT = 1e-12
TIGHT_PASSES = 5
STALL_LIMIT = 50


@unique
class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NOT_SOLVED = "not_solved"


@unique
class MipStatus(Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"
    CUTOFF_EXHAUSTED = "cutoff_exhausted"
    INFEASIBLE = "infeasible"


@dataclass
class LpConfig:
    backend: str = "auto"
    max_dense_entries: int = 250_000
    max_iterations: Optional[int] = None
    refactor_every: int = 100

    def validate(self) -> None:
        if self.backend not in ("auto", "simplex", "highs"):
            raise ParamsError(f"unknown LP backend '{self.backend}'")
        if self.max_dense_entries < 1:
            raise ParamsError("max_dense_entries must be positive")
        if self.refactor_every < 1:
            raise ParamsError("refactor_every must be positive")


@dataclass
class LpSolution:
    status: LpStatus
    objective: float
    values: np.ndarray
    iterations: int = 0
    backend: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


@dataclass
class BnbConfig:
    time_limit: float = 60.0
    cutoff: Optional[float] = None
    gap_tol: float = 1e-6
    fixings: Dict[VarKey, int] = field(default_factory=dict)
    node_limit: Optional[int] = None

    def validate(self) -> None:
        if not self.time_limit > 0:
            raise ParamsError(f"time_limit must be > 0, got {self.time_limit}")
        if self.gap_tol < 0:
            raise ParamsError(f"gap_tol must be >= 0, got {self.gap_tol}")
        if self.node_limit is not None and self.node_limit < 1:
            raise ParamsError(f"node_limit must be >= 1, got {self.node_limit}")
        for key, value in self.fixings.items():
            if value not in (0, 1):
                raise ParamsError(f"fixing {key} must be 0 or 1, got {value}")


@dataclass
class MipResult:
    status: MipStatus
    values: Optional[np.ndarray]
    objective: Optional[float]
    best_bound: float
    nodes: int = 0
    elapsed: float = 0.0

    @property
    def has_incumbent(self) -> bool:
        return self.values is not None


# ---------------------------------------------------------------------------
# Dense bounded-variable primal simplex
# ---------------------------------------------------------------------------

class DenseSimplex:
    """Maximize c x s.t. A x <= b (rows flagged is_eq as equalities), 0 <= x <= 1."""

    def __init__(self, c: np.ndarray, A: np.ndarray, b: np.ndarray, is_eq: np.ndarray,
                 config: Optional[LpConfig] = None):
        self.config = config or LpConfig()
        m, n = A.shape
        self.m, self.n = m, n

        scale = np.abs(A).max(axis=1) if n else np.ones(m)
        scale[scale < 1e-12] = 1.0
        A = A / scale[:, None]
        b = b / scale
        flip = b < 0
        A[flip] *= -1.0
        b = np.abs(b)
        needs_art = flip | is_eq
        art_rows = np.flatnonzero(needs_art)
        k = art_rows.size
        self.k = k

        N = n + m + k
        T0 = np.zeros((m, N))
        T0[:, :n] = A
        T0[np.arange(m), n + np.arange(m)] = np.where(flip, -1.0, 1.0)
        T0[art_rows, n + m + np.arange(k)] = 1.0
        self.T0 = T0
        self.rhs = b

        self.lb = np.zeros(N)
        self.ub = np.concatenate([np.ones(n), np.where(is_eq, 0.0, np.inf), np.full(k, np.inf)])
        self.basis = n + np.arange(m)
        self.basis[art_rows] = n + m + np.arange(k)
        self.cost_phase2 = np.concatenate([c, np.zeros(m + k)])
        self.iterations = 0

    def solve(self) -> Tuple[LpStatus, np.ndarray]:
        n, m, k = self.n, self.m, self.k
        N = n + m + k
        self.T = self.T0.copy()
        self.x = np.zeros(N)
        self.x[self.basis] = self.rhs
        self.at_ub = np.zeros(N, dtype=bool)
        max_iter = self.config.max_iterations or 50 * (m + N) + 1000

        if k:
            cost = np.zeros(N)
            cost[n + m:] = -1.0
            status = self._run(cost, max_iter)
            if status != LpStatus.OPTIMAL:
                return status, self.x[:n]
            if self.x[n + m:].sum() > TOL_LP * max(1.0, self.rhs.max()):
                return LpStatus.INFEASIBLE, self.x[:n]
            self.ub[n + m:] = 0.0
            self.x[n + m:] = 0.0

        status = self._run(self.cost_phase2, max_iter)
        return status, np.clip(self.x[:n], 0.0, 1.0)

    def _refactor(self) -> None:
        B = self.T0[:, self.basis]
        nonbasic = np.ones(self.T0.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        try:
            self.T = np.linalg.solve(B, self.T0)
            residual = self.rhs - self.T0[:, nonbasic] @ self.x[nonbasic]
            self.x[self.basis] = np.linalg.solve(B, residual)
        except np.linalg.LinAlgError:
            logger.debug("Basis refactorization failed; keeping the updated tableau")

    def _run(self, cost: np.ndarray, max_iter: int) -> LpStatus:
        T, x, lb, ub = self.T, self.x, self.lb, self.ub
        m = self.m
        bland = False
        stall = 0
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                logger.warning(f"Simplex hit the iteration limit ({max_iter})")
                return LpStatus.NOT_SOLVED
            if since_refactor >= self.config.refactor_every:
                self._refactor()
                T = self.T
                since_refactor = 0

            d = cost - cost[self.basis] @ T
            movable = (ub - lb) > 0.0
            movable[self.basis] = False
            up = movable & ~self.at_ub & (d > TOL_COST)
            down = movable & self.at_ub & (d < -TOL_COST)
            eligible = up | down
            if not eligible.any():
                return LpStatus.OPTIMAL
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if up[q] else -1.0

            alpha = direction * T[:, q]
            xB = x[self.basis]
            ratios = np.full(m, np.inf)
            dec = alpha > TOL_PIVOT
            inc = alpha < -TOL_PIVOT
            ratios[dec] = (xB[dec] - lb[self.basis][dec]) / alpha[dec]
            ratios[inc] = (ub[self.basis][inc] - xB[inc]) / -alpha[inc]
            np.maximum(ratios, 0.0, out=ratios)
            theta_row = ratios.min() if m else np.inf
            flip_len = ub[q] - lb[q]

            if not np.isfinite(min(theta_row, flip_len)):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            since_refactor += 1
            if flip_len <= theta_row:
                theta = flip_len
                x[self.basis] -= theta * alpha
                self.at_ub[q] = not self.at_ub[q]
                x[q] = ub[q] if self.at_ub[q] else lb[q]
            else:
                theta = theta_row
                ties = np.flatnonzero(ratios <= theta_row + 1e-12)
                if bland:
                    p = int(ties[np.argmin(self.basis[ties])])
                else:
                    p = int(ties[np.argmax(np.abs(alpha[ties]))])
                leaving = self.basis[p]
                x[self.basis] -= theta * alpha
                x[q] += direction * theta
                self.at_ub[leaving] = alpha[p] < 0
                x[leaving] = ub[leaving] if self.at_ub[leaving] else lb[leaving]
                self.at_ub[q] = False

                pivot_row = T[p] / T[p, q]
                T -= np.outer(T[:, q], pivot_row)
                T[p] = pivot_row
                self.basis[p] = q

            if theta <= 1e-12:
                stall += 1
                if stall > STALL_LIMIT and not bland:
                    logger.debug("Simplex stalling; switching to Bland's rule")
                    bland = True
            else:
                stall = 0


# ---------------------------------------------------------------------------
# LP entry points
# ---------------------------------------------------------------------------

def _solve_highs(c: np.ndarray, A: sps.csr_matrix, b: np.ndarray, is_eq: np.ndarray) -> Tuple[LpStatus, np.ndarray, int]:
    ineq = ~is_eq
    result = linprog(
        -c,
        A_ub=A[np.flatnonzero(ineq)] if ineq.any() else None,
        b_ub=b[ineq] if ineq.any() else None,
        A_eq=A[np.flatnonzero(is_eq)] if is_eq.any() else None,
        b_eq=b[is_eq] if is_eq.any() else None,
        bounds=(0.0, 1.0),
        method="highs",
    )
    iterations = int(getattr(result, "nit", 0) or 0)
    if result.status == 0:
        return LpStatus.OPTIMAL, np.clip(result.x, 0.0, 1.0), iterations
    if result.status == 2:
        return LpStatus.INFEASIBLE, np.zeros(c.size), iterations
    if result.status == 3:
        return LpStatus.UNBOUNDED, np.zeros(c.size), iterations
    logger.warning(f"HiGHS returned status {result.status}: {result.message}")
    return LpStatus.NOT_SOLVED, np.zeros(c.size), iterations


def _max_violation(A: sps.csr_matrix, b: np.ndarray, is_eq: np.ndarray, x: np.ndarray) -> float:
    if not b.size:
        return 0.0
    residual = A @ x - b
    residual[~is_eq] = np.maximum(residual[~is_eq], 0.0)
    scale = np.maximum(1.0, np.abs(b))
    return float(np.max(np.abs(residual) / scale))


def _fix_tight_rows(sf: StandardForm, lb: np.ndarray, ub: np.ndarray) -> bool:
    """Pin the variables of rows whose minimum activity already meets the rhs.

    Such a row leaves every variable with a positive coefficient at its lower
    bound and every negative one at its upper bound, in the LP as well. Works
    in place; False when some row cannot be met at all.
    """
    pos, neg = sf.A.maximum(0), sf.A.minimum(0)
    tol = TOL_TIGHT * np.maximum(1.0, np.abs(sf.b))
    for _ in range(TIGHT_PASSES):
        free = lb < ub
        if not free.any():
            return True
        slack = sf.b - (pos @ lb + neg @ ub)
        if np.any(slack < -1e-9 * np.maximum(1.0, np.abs(sf.b))):
            return False
        tight = np.flatnonzero(slack <= tol)
        if not tight.size:
            return True
        coo = sf.A[tight].tocoo()
        hit = free[coo.col]
        if not hit.any():
            return True
        down = coo.col[hit & (coo.data > 0)]
        up = coo.col[hit & (coo.data < 0)]
        ub[down] = lb[down]
        lb[up] = ub[up]
    return True


def solve_lp_arrays(sf: StandardForm, lb: np.ndarray, ub: np.ndarray,
                    config: Optional[LpConfig] = None) -> LpSolution:
    """Solve the relaxation of a standard-form model under bounds lb <= x <= ub.

    Bounds are 0/1 per variable; lb == ub marks a fixed variable.
    """
    config = config or LpConfig()
    values = lb.astype(float).copy()
    if np.any(lb > ub):
        return LpSolution(LpStatus.INFEASIBLE, -np.inf, values)

    lb, ub = values, ub.astype(float).copy()
    if not _fix_tight_rows(sf, lb, ub):
        return LpSolution(LpStatus.INFEASIBLE, -np.inf, lb)
    values = lb.copy()

    free = lb < ub
    fixed_vals = np.where(free, 0.0, lb)
    b_red = sf.b - sf.A @ fixed_vals
    const = float(sf.c @ fixed_vals)
    A_free = sf.A_csc[:, np.flatnonzero(free)].tocsr()

    tol = 1e-9 * np.maximum(1.0, np.abs(sf.b))
    pos = np.asarray(A_free.maximum(0).sum(axis=1)).ravel()
    neg = np.asarray(A_free.minimum(0).sum(axis=1)).ravel()
    if np.any(neg > b_red + tol) or np.any(sf.is_eq & (pos < b_red - tol)):
        return LpSolution(LpStatus.INFEASIBLE, -np.inf, values)
    nnz = np.diff(A_free.indptr)
    keep = np.where(sf.is_eq, nnz > 0, pos > b_red + tol)

    c_free = sf.c[free]
    n_free = int(free.sum())
    if n_free == 0 or not keep.any():
        x_free = (c_free > 0).astype(float)
        values[free] = x_free
        return LpSolution(LpStatus.OPTIMAL, const + float(c_free @ x_free), values, backend="trivial")

    A_red = A_free[np.flatnonzero(keep)]
    b_keep = b_red[keep]
    eq_keep = sf.is_eq[keep]
    m_red = A_red.shape[0]
    backend = config.backend
    if backend == "auto":
        backend = "simplex" if m_red * (n_free + 2 * m_red) <= config.max_dense_entries else "highs"

    iterations = 0
    if backend == "simplex":
        simplex = DenseSimplex(c_free, A_red.toarray(), b_keep, eq_keep, config)
        status, x_free = simplex.solve()
        iterations = simplex.iterations
        if status == LpStatus.OPTIMAL and _max_violation(A_red, b_keep, eq_keep, x_free) > 1e-6:
            logger.warning("Dense simplex solution violates rows beyond tolerance; re-solving with HiGHS")
            status = LpStatus.NOT_SOLVED
        if status == LpStatus.NOT_SOLVED:
            backend = "highs"
    if backend == "highs":
        status, x_free, its = _solve_highs(c_free, A_red, b_keep, eq_keep)
        iterations += its

    if status != LpStatus.OPTIMAL:
        return LpSolution(status, -np.inf if status == LpStatus.INFEASIBLE else np.inf, values, iterations, backend)
    values[free] = x_free
    return LpSolution(status, const + float(c_free @ x_free), values, iterations, backend)


def solve_lp(model: MipModel, fixings: Optional[Mapping[VarKey, int]] = None,
             config: Optional[LpConfig] = None) -> LpSolution:
    """Solve the continuous relaxation of a model.

    Args:
        model: Model with binary variables relaxed to [0, 1]
        fixings: Variables held at 0 or 1
        config: LP backend selection

    Returns:
        LpSolution: Status, objective and primal values indexed like model.var_keys
    """
    lb = np.zeros(model.num_vars)
    ub = np.ones(model.num_vars)
    for idx, value in model.fixings_by_index(fixings or {}).items():
        lb[idx] = ub[idx] = value
    return solve_lp_arrays(model.standard_form(), lb, ub, config)


def reuse_optimum(model: MipModel, parent: LpSolution, extra: Mapping[VarKey, int],
                  tol: float = TOL_LP) -> Optional[LpSolution]:
    """The relaxation's optimum after extra fixings, when the parent's still serves.

    Extra fixings only shrink the feasible set, so if the parent's optimum
    with the extra values written in stays feasible at the same objective, it
    is optimal again. An infeasible parent stays infeasible.

    Returns:
        Optional[LpSolution]: The reused solution, or None when a solve is needed
    """
    if parent.status == LpStatus.INFEASIBLE:
        return LpSolution(LpStatus.INFEASIBLE, -np.inf, parent.values, backend="reused")
    if not parent.optimal:
        return None
    point = np.array(parent.values, dtype=float)
    for idx, value in model.fixings_by_index(extra).items():
        point[idx] = value
    sf = model.standard_form()
    if float(sf.c @ point) < parent.objective - tol:
        return None
    if _max_violation(sf.A, sf.b, sf.is_eq, point) > 1e-6:
        return None
    return LpSolution(LpStatus.OPTIMAL, parent.objective, point, backend="reused")


# ---------------------------------------------------------------------------
# Branch-and-bound
# ---------------------------------------------------------------------------

class FixingPropagator:
    """Activity-based implications of 0/1 bounds over every row."""

    def __init__(self, sf: StandardForm):
        A = sps.vstack([sf.A, -sf.A[np.flatnonzero(sf.is_eq)]]).tocsr()
        self.b = np.concatenate([sf.b, -sf.b[sf.is_eq]])
        self.pos = A.maximum(0).tocsr()
        self.neg = A.minimum(0).tocsr()
        coo = A.tocoo()
        self.rows, self.cols, self.data = coo.row, coo.col, coo.data
        self.tol = 1e-9 * np.maximum(1.0, np.abs(self.b))

    def propagate(self, lb: np.ndarray, ub: np.ndarray) -> bool:
        """Tighten lb/ub in place; False when the bounds admit no point."""
        for _ in range(lb.size + 1):
            if np.any(lb > ub):
                return False
            slack = self.b - (self.pos @ lb + self.neg @ ub)
            if np.any(slack < -self.tol):
                return False
            free = lb < ub
            forced = free[self.cols] & (np.abs(self.data) > slack[self.rows] + self.tol[self.rows])
            if not forced.any():
                return True
            to_zero = self.cols[forced & (self.data > 0)]
            to_one = self.cols[forced & (self.data < 0)]
            ub[to_zero] = 0.0
            lb[to_one] = 1.0
        return True


def _most_fractional(values: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> int:
    frac = np.minimum(values - np.floor(values), np.ceil(values) - values)
    frac[lb == ub] = 0.0
    j = int(np.argmax(frac))
    return j if frac[j] > TOL_INT else -1


def solve_mip(model: MipModel, config: Optional[BnbConfig] = None,
              lp_config: Optional[LpConfig] = None) -> MipResult:
    """Best-bound branch-and-bound over binary variables.

    An incumbent is only accepted when strictly better than both the cutoff
    and the current incumbent, so with a cutoff equal to the optimum the
    search ends in CUTOFF_EXHAUSTED without an incumbent.
    """
    config = config or BnbConfig()
    config.validate()
    start = time.time()
    sf = model.standard_form()
    propagator = FixingPropagator(sf)

    lb = np.zeros(model.num_vars)
    ub = np.ones(model.num_vars)
    for idx, value in model.fixings_by_index(config.fixings).items():
        lb[idx] = ub[idx] = value

    incumbent: Optional[np.ndarray] = None
    incumbent_obj = -np.inf
    cutoff = config.cutoff if config.cutoff is not None else -np.inf

    def threshold() -> float:
        return max(cutoff, incumbent_obj)

    def finish(status: MipStatus, bound: float, nodes: int) -> MipResult:
        elapsed = time.time() - start
        logger.debug(f"B&B on {model.name}: {status.value} after {nodes} nodes, {elapsed:.2f}s")
        return MipResult(status, incumbent, incumbent_obj if incumbent is not None else None, bound, nodes, elapsed)

    if not propagator.propagate(lb, ub):
        return finish(MipStatus.INFEASIBLE, -np.inf, 0)
    root = solve_lp_arrays(sf, lb, ub, lp_config)
    if root.status == LpStatus.INFEASIBLE:
        return finish(MipStatus.INFEASIBLE, -np.inf, 1)
    if root.status != LpStatus.OPTIMAL:
        logger.warning(f"Root LP of {model.name} not solved ({root.status.value})")
        return finish(MipStatus.INFEASIBLE, np.inf, 1)

    heap = [(-root.objective, 0, lb, ub, root.values)]
    seq = 1
    nodes = 1
    while heap:
        neg_bound, _, lb, ub, values = heapq.heappop(heap)
        bound = -neg_bound
        if bound <= cutoff or bound <= incumbent_obj + config.gap_tol:
            continue
        if time.time() - start > config.time_limit:
            return finish(MipStatus.TIME_LIMIT, max(bound, incumbent_obj), nodes)
        if config.node_limit is not None and nodes >= config.node_limit:
            return finish(MipStatus.NODE_LIMIT, max(bound, incumbent_obj), nodes)

        j = _most_fractional(values, lb, ub)
        if j < 0:
            point = np.round(values)
            obj = float(sf.c @ point)
            if obj > threshold() + 1e-9:
                incumbent, incumbent_obj = point, obj
                logger.debug(f"New incumbent {obj:.6f} at node {nodes}")
            continue

        for value in (1.0, 0.0):
            child_lb, child_ub = lb.copy(), ub.copy()
            child_lb[j] = child_ub[j] = value
            if not propagator.propagate(child_lb, child_ub):
                continue
            child = solve_lp_arrays(sf, child_lb, child_ub, lp_config)
            nodes += 1
            if child.status != LpStatus.OPTIMAL:
                continue
            if child.objective <= cutoff or child.objective <= incumbent_obj + config.gap_tol:
                continue
            heapq.heappush(heap, (-child.objective, seq, child_lb, child_ub, child.values))
            seq += 1

    if incumbent is not None:
        return finish(MipStatus.OPTIMAL, incumbent_obj, nodes)
    if config.cutoff is not None:
        return finish(MipStatus.CUTOFF_EXHAUSTED, cutoff, nodes)
    return finish(MipStatus.INFEASIBLE, -np.inf, nodes)
