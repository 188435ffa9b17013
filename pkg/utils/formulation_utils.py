"""
SIR arithmetic, the big-M SPCAP model builder and candidate solutions.

Variables are addressed by keys:
    ("x", t)        terminal t served
    ("z", b, l)     base b emits at level l (l = 1..|L|)
    ("y", t, b)     base b belongs to the cluster serving t
    ("v", t, b, l)  linearization of z[b,l] * y[t,b]
Terminals and bases are positional indices into the Instance.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sps

from utils.instance_utils import Instance, InstanceFormatError

logger = logging.getLogger(__name__)

# Relative tolerance on the SIR inequality.
TOL_FEAS = 1e-9

VarKey = Tuple

SENSES = ("<=", ">=", "==")


def x_key(t: int) -> VarKey:
    return ("x", t)


def z_key(b: int, l: int) -> VarKey:
    return ("z", b, l)


def y_key(t: int, b: int) -> VarKey:
    return ("y", t, b)


def v_key(t: int, b: int, l: int) -> VarKey:
    return ("v", t, b, l)


# ---------------------------------------------------------------------------
# SIR arithmetic
# ---------------------------------------------------------------------------

def _cluster_mask(num_bases: int, cluster: Iterable[int]) -> np.ndarray:
    mask = np.zeros(num_bases, dtype=bool)
    mask[list(cluster)] = True
    return mask


def _signal_terms(a_row: np.ndarray, powers: np.ndarray, mask: np.ndarray) -> Tuple[float, float]:
    received = a_row * powers
    return float(np.sum(received * mask)), float(np.sum(received * ~mask))


def sir_value(inst: Instance, powers: Sequence[float], cluster: Iterable[int], t: int) -> float:
    """Signal-to-interference ratio of terminal t for emitted powers (watts)."""
    p = np.asarray(powers, dtype=float)
    useful, interf = _signal_terms(inst.atten_matrix[t], p, _cluster_mask(inst.num_bases, cluster))
    return useful / (inst.noise + interf)


def sir_margin(inst: Instance, powers: Sequence[float], cluster: Iterable[int], t: int) -> Tuple[float, float]:
    """Return (lhs - rhs, tolerance) of the linear SIR inequality for t."""
    p = np.asarray(powers, dtype=float)
    useful, interf = _signal_terms(inst.atten_matrix[t], p, _cluster_mask(inst.num_bases, cluster))
    delta = inst.delta[t]
    margin = useful - delta * interf - delta * inst.noise
    tol = TOL_FEAS * max(useful + delta * interf, delta * inst.noise)
    return margin, tol


def is_served(inst: Instance, powers: Sequence[float], cluster: Iterable[int], t: int) -> bool:
    margin, tol = sir_margin(inst, powers, cluster, t)
    return margin >= -tol


def served_mask(inst: Instance, powers: np.ndarray, cluster_masks: np.ndarray) -> np.ndarray:
    """Vectorized is_served over all terminals.

    Args:
        inst: Instance
        powers: Emitted power per base, shape (|B|,)
        cluster_masks: Boolean cluster membership, shape (|T|, |B|)

    Returns:
        np.ndarray: Boolean served flag per terminal
    """
    received = inst.atten_matrix * powers[None, :]
    useful = np.sum(received * cluster_masks, axis=1)
    interf = np.sum(received * ~cluster_masks, axis=1)
    delta = inst.delta_vector
    margin = useful - delta * interf - delta * inst.noise
    tol = TOL_FEAS * np.maximum(useful + delta * interf, delta * inst.noise)
    return margin >= -tol


def big_m_value(inst: Instance, t: int) -> float:
    """M_t large enough to make t's SIR row redundant when x_t = 0."""
    delta = inst.delta[t]
    return delta * float(np.sum(inst.atten_matrix[t])) * inst.p_max + delta * inst.noise


# ---------------------------------------------------------------------------
# Generic binary model
# ---------------------------------------------------------------------------

@dataclass
class Row:
    coefs: Dict[int, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass
class StandardForm:
    """Rows rewritten as A x <= b (inequalities) or A x == b (equalities)."""

    A: sps.csr_matrix
    b: np.ndarray
    is_eq: np.ndarray
    c: np.ndarray
    A_csc: Optional[sps.csc_matrix] = None

    def __post_init__(self):
        if self.A_csc is None:
            self.A_csc = self.A.tocsc()


class MipModel:
    """Maximization model over binary variables with linear rows."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_keys: List[VarKey] = []
        self.var_names: List[str] = []
        self.var_index: Dict[VarKey, int] = {}
        self.objective: Dict[int, float] = {}
        self.rows: List[Row] = []
        self.sense = "max"
        self._standard: Optional[StandardForm] = None

    @property
    def num_vars(self) -> int:
        return len(self.var_keys)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_var(self, key: VarKey, obj: float = 0.0, name: Optional[str] = None) -> int:
        if key in self.var_index:
            raise ValueError(f"variable {key} registered twice")
        idx = len(self.var_keys)
        self.var_keys.append(key)
        self.var_names.append(name or "_".join(str(k) for k in key))
        self.var_index[key] = idx
        if obj:
            self.objective[idx] = float(obj)
        self._standard = None
        return idx

    def index(self, key: VarKey) -> int:
        return self.var_index[key]

    def add_row(self, terms: Mapping[VarKey, float], sense: str, rhs: float, name: str = "") -> int:
        """Add a row given by variable keys; zero coefficients are dropped."""
        if sense not in SENSES:
            raise ValueError(f"unknown row sense '{sense}'")
        coefs: Dict[int, float] = {}
        for key, coef in terms.items():
            if coef == 0.0:
                continue
            idx = self.var_index[key]
            coefs[idx] = coefs.get(idx, 0.0) + float(coef)
        self.rows.append(Row(coefs=coefs, sense=sense, rhs=float(rhs), name=name or f"r{len(self.rows)}"))
        self._standard = None
        return len(self.rows) - 1

    def copy(self, name: Optional[str] = None) -> "MipModel":
        other = MipModel(name or self.name)
        other.var_keys = list(self.var_keys)
        other.var_names = list(self.var_names)
        other.var_index = dict(self.var_index)
        other.objective = dict(self.objective)
        other.rows = list(self.rows)
        return other

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for idx, coef in self.objective.items():
            c[idx] = coef
        return c

    def standard_form(self) -> StandardForm:
        if self._standard is None:
            data, rows, cols = [], [], []
            b = np.zeros(self.num_rows)
            is_eq = np.zeros(self.num_rows, dtype=bool)
            for i, row in enumerate(self.rows):
                sign = -1.0 if row.sense == ">=" else 1.0
                for j, coef in row.coefs.items():
                    rows.append(i)
                    cols.append(j)
                    data.append(sign * coef)
                b[i] = sign * row.rhs
                is_eq[i] = row.sense == "=="
            A = sps.csr_matrix((data, (rows, cols)), shape=(self.num_rows, self.num_vars))
            self._standard = StandardForm(A=A, b=b, is_eq=is_eq, c=self.objective_vector())
        return self._standard

    def objective_of(self, values: np.ndarray) -> float:
        return float(sum(coef * values[idx] for idx, coef in self.objective.items()))

    def values_by_key(self, values: Sequence[float]) -> Dict[VarKey, float]:
        return {key: float(values[i]) for i, key in enumerate(self.var_keys)}

    def vector_from_keys(self, mapping: Mapping[VarKey, float], default: float = 0.0) -> np.ndarray:
        vec = np.full(self.num_vars, default, dtype=float)
        for key, value in mapping.items():
            idx = self.var_index.get(key)
            if idx is not None:
                vec[idx] = value
        return vec

    def fixings_by_index(self, fixings: Mapping[VarKey, int]) -> Dict[int, int]:
        return {self.var_index[key]: int(value) for key, value in fixings.items() if key in self.var_index}

    def violated_rows(self, values: Sequence[float], tol: float = 1e-7) -> List[str]:
        """Names of rows violated by a point, with a tolerance scaled by row size."""
        violated = []
        for row in self.rows:
            lhs = sum(coef * values[j] for j, coef in row.coefs.items())
            scale = max(1.0, abs(row.rhs), max((abs(c) for c in row.coefs.values()), default=0.0))
            slack = tol * scale
            if row.sense == "<=" and lhs > row.rhs + slack:
                violated.append(row.name)
            elif row.sense == ">=" and lhs < row.rhs - slack:
                violated.append(row.name)
            elif row.sense == "==" and abs(lhs - row.rhs) > slack:
                violated.append(row.name)
        return violated

    def to_lp_text(self) -> str:
        """Dump the model in LP file format for debugging."""

        def expr(coefs: Mapping[int, float]) -> str:
            if not coefs:
                return "0"
            parts = []
            for j in sorted(coefs):
                coef = coefs[j]
                parts.append(f"{'-' if coef < 0 else '+'} {abs(coef):.12g} {self.var_names[j]}")
            return " ".join(parts)

        lines = [f"\\ {self.name}", "Maximize", f" obj: {expr(self.objective)}", "Subject To"]
        for row in self.rows:
            op = "=" if row.sense == "==" else row.sense
            lines.append(f" {row.name}: {expr(row.coefs)} {op} {row.rhs:.12g}")
        lines.append("Bounds")
        lines.extend(f" 0 <= {name} <= 1" for name in self.var_names)
        lines.append("Binaries")
        lines.extend(f" {name}" for name in self.var_names)
        lines.append("End")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# big-M SPCAP
# ---------------------------------------------------------------------------

def _register_power_vars(model: MipModel, inst: Instance) -> None:
    for b, bid in enumerate(inst.bases):
        for l in range(1, inst.num_levels + 1):
            model.add_var(z_key(b, l), name=f"z_{bid}_{l}")


def _register_terminal_vars(model: MipModel, inst: Instance, terminals: Iterable[int]) -> None:
    terminals = list(terminals)
    for t in terminals:
        model.add_var(x_key(t), obj=inst.revenue[t] + inst.coop_cost[t], name=f"x_{inst.terminals[t]}")
    _register_power_vars(model, inst)
    for t in terminals:
        for b, bid in enumerate(inst.bases):
            model.add_var(y_key(t, b), obj=-inst.coop_cost[t], name=f"y_{inst.terminals[t]}_{bid}")
    for t in terminals:
        for b, bid in enumerate(inst.bases):
            for l in range(1, inst.num_levels + 1):
                model.add_var(v_key(t, b, l), name=f"v_{inst.terminals[t]}_{bid}_{l}")


def sir_row_terms(inst: Instance, t: int) -> Tuple[Dict[VarKey, float], float]:
    """Terms and rhs of t's big-M SIR row in '>=' form.

    (1+d) sum a P v - d sum a P z + M (1 - x) >= d N, with the constant M
    moved to the right-hand side.
    """
    delta = inst.delta[t]
    m_t = big_m_value(inst, t)
    terms: Dict[VarKey, float] = {}
    for b in range(inst.num_bases):
        a = inst.atten[t][b]
        for l in range(1, inst.num_levels + 1):
            gain = a * inst.levels[l - 1]
            terms[v_key(t, b, l)] = (1.0 + delta) * gain
            terms[z_key(b, l)] = -delta * gain
    terms[x_key(t)] = -m_t
    return terms, delta * inst.noise - m_t


def _add_terminal_rows(model: MipModel, inst: Instance, t: int, include_sir: bool) -> None:
    tid = inst.terminals[t]
    if include_sir:
        terms, rhs = sir_row_terms(inst, t)
        model.add_row(terms, ">=", rhs, name=f"sir_{tid}")
    for b, bid in enumerate(inst.bases):
        for l in range(1, inst.num_levels + 1):
            v, z, y = v_key(t, b, l), z_key(b, l), y_key(t, b)
            model.add_row({v: 1.0, z: -1.0}, "<=", 0.0, name=f"lin1_{tid}_{bid}_{l}")
            model.add_row({v: 1.0, y: -1.0}, "<=", 0.0, name=f"lin2_{tid}_{bid}_{l}")
            model.add_row({v: 1.0, z: -1.0, y: -1.0}, ">=", -1.0, name=f"lin3_{tid}_{bid}_{l}")


def _add_gub_rows(model: MipModel, inst: Instance) -> None:
    for b, bid in enumerate(inst.bases):
        model.add_row({z_key(b, l): 1.0 for l in range(1, inst.num_levels + 1)}, "<=", 1.0, name=f"gub_{bid}")


def add_service_rows(model: MipModel, inst: Instance) -> int:
    """Add the valid service rows of every terminal the model holds.

    x_t <= sum_{b,l} v_tbl: a served terminal needs a powered cluster member,
    since noise is positive. sum_l v_tbl <= y_tb: a member sends on one level.
    Together they give x_t <= sum_b y_tb, so the relaxation cannot serve a
    terminal with an empty cluster.

    Returns:
        int: Rows added
    """
    added = 0
    for t, tid in enumerate(inst.terminals):
        if x_key(t) not in model.var_index:
            continue
        terms: Dict[VarKey, float] = {x_key(t): 1.0}
        for b, bid in enumerate(inst.bases):
            levels = {v_key(t, b, l): 1.0 for l in range(1, inst.num_levels + 1)}
            model.add_row({**levels, y_key(t, b): -1.0}, "<=", 0.0, name=f"one_{tid}_{bid}")
            terms.update({key: -1.0 for key in levels})
            added += 1
        model.add_row(terms, "<=", 0.0, name=f"srv_{tid}")
        added += 1
    return added


def build_bigM_model(inst: Instance, include_sir: bool = True) -> MipModel:
    """Build (big-M SPCAP).

    Args:
        inst: Valid instance
        include_sir: When False the SIR rows are left out, which is the
            skeleton the power-indexed formulation adds its covers to

    Returns:
        MipModel: |T| + |B||L| + |T||B| + |T||B||L| binary variables
    """
    model = MipModel(name=f"bigM_{inst.name}" if include_sir else f"pi_{inst.name}")
    terminals = range(inst.num_terminals)
    _register_terminal_vars(model, inst, terminals)
    if include_sir:
        for t in terminals:
            terms, rhs = sir_row_terms(inst, t)
            model.add_row(terms, ">=", rhs, name=f"sir_{inst.terminals[t]}")
    _add_gub_rows(model, inst)
    for t in terminals:
        _add_terminal_rows(model, inst, t, include_sir=False)
    logger.debug(f"Built {model.name}: {model.num_vars} variables, {model.num_rows} rows")
    return model


def build_terminal_model(inst: Instance, t: int, include_sir: bool = True) -> MipModel:
    """The part of (big-M SPCAP) that concerns a single terminal.

    Once every power variable is fixed the relaxation separates by terminal,
    and the full value is the sum of these per-terminal values.
    """
    model = MipModel(name=f"bigM_{inst.name}_{inst.terminals[t]}")
    _register_terminal_vars(model, inst, [t])
    _add_gub_rows(model, inst)
    _add_terminal_rows(model, inst, t, include_sir=include_sir)
    return model


# ---------------------------------------------------------------------------
# Candidate solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateSolution:
    """Power level per base (0 = off), cluster per terminal and served flags."""

    power_level: Tuple[int, ...]
    cluster: Tuple[FrozenSet[int], ...]
    served: Tuple[bool, ...]

    @property
    def num_served(self) -> int:
        return sum(self.served)

    @property
    def max_cluster_size(self) -> int:
        sizes = [len(c) for c, s in zip(self.cluster, self.served) if s]
        return max(sizes, default=0)

    def v(self, t: int, b: int, l: int) -> int:
        return int(self.power_level[b] == l and b in self.cluster[t])

    def to_point(self, inst: Instance) -> Dict[VarKey, int]:
        """All variable values (x, z, y, v) implied by this solution."""
        point: Dict[VarKey, int] = {}
        for t in range(inst.num_terminals):
            point[x_key(t)] = int(self.served[t])
            for b in range(inst.num_bases):
                point[y_key(t, b)] = int(b in self.cluster[t])
                for l in range(1, inst.num_levels + 1):
                    point[v_key(t, b, l)] = self.v(t, b, l)
        for b in range(inst.num_bases):
            for l in range(1, inst.num_levels + 1):
                point[z_key(b, l)] = int(self.power_level[b] == l)
        return point


@dataclass
class FeasibilityReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def derive_full_solution(inst: Instance, power_level: Sequence[int], cluster: Sequence[Iterable[int]]) -> CandidateSolution:
    """Complete (z, y) into a solution: x from the SIR inequalities, v implicit.

    Serving every terminal whose SIR clears its threshold is optimal for the
    given (z, y), since r_t > 0 and x_t also offsets one cooperation cost.
    """
    levels = tuple(int(l) for l in power_level)
    clusters = tuple(frozenset(int(b) for b in c) for c in cluster)
    masks = np.zeros((inst.num_terminals, inst.num_bases), dtype=bool)
    for t, c in enumerate(clusters):
        masks[t, list(c)] = True
    served = served_mask(inst, inst.powers(levels), masks)
    return CandidateSolution(power_level=levels, cluster=clusters, served=tuple(bool(s) for s in served))


def objective_value(inst: Instance, sol: CandidateSolution) -> float:
    """sum_t r_t x_t - c_t (sum_b y_tb - x_t)."""
    total = 0.0
    for t in range(inst.num_terminals):
        x = 1.0 if sol.served[t] else 0.0
        total += inst.revenue[t] * x - inst.coop_cost[t] * (len(sol.cluster[t]) - x)
    return total


def check_feasibility(inst: Instance, sol: CandidateSolution) -> FeasibilityReport:
    """Re-verify a solution against the physics, independently of any model."""
    report = FeasibilityReport()
    if len(sol.power_level) != inst.num_bases:
        report.violations.append(f"power_level: expected {inst.num_bases} entries, got {len(sol.power_level)}")
    else:
        for b, l in enumerate(sol.power_level):
            if not 0 <= l <= inst.num_levels:
                report.violations.append(f"power_level: base {inst.bases[b]} has invalid level {l}")
    if len(sol.cluster) != inst.num_terminals:
        report.violations.append(f"cluster: expected {inst.num_terminals} entries, got {len(sol.cluster)}")
    else:
        for t, c in enumerate(sol.cluster):
            if any(not 0 <= b < inst.num_bases for b in c):
                report.violations.append(f"cluster: terminal {inst.terminals[t]} references unknown bases")
    if len(sol.served) != inst.num_terminals:
        report.violations.append(f"served: expected {inst.num_terminals} entries, got {len(sol.served)}")
    if report.violations:
        return report

    powers = inst.powers(sol.power_level)
    for t in range(inst.num_terminals):
        if sol.served[t] and not is_served(inst, powers, sol.cluster[t], t):
            sir = sir_value(inst, powers, sol.cluster[t], t)
            report.violations.append(
                f"sir: terminal {inst.terminals[t]} marked served but SIR {sir:.6g} < {inst.delta[t]:.6g}"
            )
    return report


def solution_from_values(inst: Instance, model: MipModel, values: Sequence[float]) -> CandidateSolution:
    """Read (z, y) from a model point and derive the full solution."""
    power_level = [0] * inst.num_bases
    for b in range(inst.num_bases):
        for l in range(1, inst.num_levels + 1):
            if values[model.index(z_key(b, l))] > 0.5:
                power_level[b] = l
                break
    cluster = []
    for t in range(inst.num_terminals):
        cluster.append({b for b in range(inst.num_bases) if values[model.index(y_key(t, b))] > 0.5})
    return derive_full_solution(inst, power_level, cluster)


def save_solution(inst: Instance, sol: CandidateSolution) -> str:
    """Write P and C lines plus OBJ; every non-empty cluster is kept, served or not."""
    lines = [f"P {bid} {sol.power_level[b]}" for b, bid in enumerate(inst.bases)]
    for t, tid in enumerate(inst.terminals):
        if sol.cluster[t]:
            members = " ".join(inst.bases[b] for b in sorted(sol.cluster[t]))
            lines.append(f"C {tid} {members}")
    lines.append(f"OBJ {objective_value(inst, sol):.16e}")
    return "\n".join(lines) + "\n"


def load_solution(inst: Instance, text: str) -> CandidateSolution:
    """Parse a solution file; served flags are recomputed from the physics.

    Raises:
        InstanceFormatError: On malformed lines, unknown ids, or an OBJ line
            that disagrees with the objective the P and C lines give
    """
    base_pos = {bid: b for b, bid in enumerate(inst.bases)}
    term_pos = {tid: t for t, tid in enumerate(inst.terminals)}
    power_level = [0] * inst.num_bases
    cluster: List[set] = [set() for _ in range(inst.num_terminals)]
    stated_obj, obj_line = None, None
    for no, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        try:
            if parts[0] == "P" and len(parts) == 3:
                power_level[base_pos[parts[1]]] = int(parts[2])
            elif parts[0] == "C" and len(parts) >= 3:
                cluster[term_pos[parts[1]]] = {base_pos[bid] for bid in parts[2:]}
            elif parts[0] == "OBJ" and len(parts) == 2:
                stated_obj, obj_line = float(parts[1]), no
            else:
                raise InstanceFormatError(f"unrecognized solution line '{raw.strip()}'", line=no)
        except KeyError as e:
            raise InstanceFormatError(f"unknown id {e}", line=no) from None
        except ValueError as e:
            if isinstance(e, InstanceFormatError):
                raise
            raise InstanceFormatError(str(e), line=no) from None
    sol = derive_full_solution(inst, power_level, cluster)
    if stated_obj is not None and abs(stated_obj - objective_value(inst, sol)) > 1e-6:
        raise InstanceFormatError(
            f"OBJ {stated_obj} disagrees with the recomputed objective {objective_value(inst, sol)}",
            line=obj_line, field="OBJ",
        )
    return sol
