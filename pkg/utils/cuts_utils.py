"""
GUB cover inequalities for the SIR rows.

A cover for terminal t is a set of serving bases (each capped at a level)
and a set of interfering bases (each emitting at or above a floor level)
such that the worst configuration inside the cover cannot serve t. Its row:

    x_t + sum_i sum_{l <= lam_i} v[t,b_i,l] + sum_j sum_{l >= q_j} z[g_j,l]
        - sum_{b not serving} y[t,b]  <=  |serving| + |interfering|

The y term lets a base outside the cover join t's cluster and restore
service, which the cover alone cannot rule out.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from utils.formulation_utils import MipModel, VarKey, is_served, v_key, x_key, y_key, z_key
from utils.instance_utils import Instance, InstanceFormatError

logger = logging.getLogger(__name__)

TOL_CUT = 1e-6

# Exhaustive validity checks enumerate (|L|+1)^|B| * 2^|B| configurations.
VALIDITY_CHECK_CAP = 200_000


@dataclass(frozen=True)
class GubCoverCut:
    terminal: int
    serving: Tuple[Tuple[int, int], ...]
    interfering: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.serving and not self.interfering:
            raise ValueError("a cover needs at least one serving or interfering base")
        bases = [b for b, _ in self.serving] + [g for g, _ in self.interfering]
        if len(set(bases)) != len(bases):
            raise ValueError("serving and interfering bases must be distinct")

    @property
    def rhs(self) -> float:
        return float(len(self.serving) + len(self.interfering))

    def row_terms(self, inst: Instance) -> Dict[VarKey, float]:
        t = self.terminal
        terms: Dict[VarKey, float] = {x_key(t): 1.0}
        serving_bases = set()
        for b, lam in self.serving:
            serving_bases.add(b)
            for l in range(1, lam + 1):
                terms[v_key(t, b, l)] = 1.0
        for g, q in self.interfering:
            for l in range(q, inst.num_levels + 1):
                terms[z_key(g, l)] = 1.0
        for b in range(inst.num_bases):
            if b not in serving_bases:
                terms[y_key(t, b)] = -1.0
        return terms

    def lhs(self, inst: Instance, point: Mapping[VarKey, float]) -> float:
        return sum(coef * point.get(key, 0.0) for key, coef in self.row_terms(inst).items())

    def violation(self, inst: Instance, point: Mapping[VarKey, float]) -> float:
        return self.lhs(inst, point) - self.rhs

    def witness(self, inst: Instance) -> Tuple[List[int], List[int]]:
        """Power levels and cluster of the configuration the cover excludes."""
        levels = [0] * inst.num_bases
        for b, lam in self.serving:
            levels[b] = lam
        for g, q in self.interfering:
            levels[g] = q
        return levels, [b for b, _ in self.serving]

    def to_text(self, inst: Instance) -> str:
        serving = " ".join(f"{inst.bases[b]}:{lam}" for b, lam in self.serving)
        interfering = " ".join(f"{inst.bases[g]}:{q}" for g, q in self.interfering)
        return f"GCI {inst.terminals[self.terminal]} | {serving} | {interfering}".rstrip()


def witness_fails(inst: Instance, t: int, serving: Sequence[Tuple[int, int]],
                  interfering: Sequence[Tuple[int, int]] = ()) -> bool:
    """True when serving at exactly lam_i with interferers at exactly q_j leaves t unserved."""
    levels = [0] * inst.num_bases
    for b, lam in serving:
        levels[b] = lam
    for g, q in interfering:
        levels[g] = q
    return not is_served(inst, inst.powers(levels), [b for b, _ in serving], t)


def enumerate_relaxed_gcis(inst: Instance) -> List[GubCoverCut]:
    """Single-server / single-interferer covers, non-dominated ones only."""
    cuts: List[GubCoverCut] = []
    levels = range(1, inst.num_levels + 1)
    for t in range(inst.num_terminals):
        for beta in range(inst.num_bases):
            # Levels at which beta alone cannot serve t form a prefix.
            lonely = [lam for lam in levels if witness_fails(inst, t, [(beta, lam)])]
            lam_free = max(lonely, default=0)
            if lam_free:
                cuts.append(GubCoverCut(t, ((beta, lam_free),)))
            for b in range(inst.num_bases):
                if b == beta:
                    continue
                best_lam_by_q: Dict[int, int] = {}
                for lam in levels:
                    if lam <= lam_free:
                        continue
                    q_min = next((q for q in levels if witness_fails(inst, t, [(beta, lam)], [(b, q)])), None)
                    if q_min is None:
                        continue
                    best_lam_by_q[q_min] = max(lam, best_lam_by_q.get(q_min, 0))
                for q in sorted(best_lam_by_q):
                    cuts.append(GubCoverCut(t, ((beta, best_lam_by_q[q]),), ((b, q),)))
    logger.info(f"Enumerated {len(cuts)} relaxed GCIs for {inst.name}")
    return cuts


def _minimal_failing_levels(inst: Instance, t: int, serving: Sequence[Tuple[int, int]],
                            gamma: Sequence[int]) -> List[Tuple[int, ...]]:
    """Minimal elements of the (upward closed) set of failing interferer levels."""
    levels = range(1, inst.num_levels + 1)
    failing = {
        q for q in itertools.product(levels, repeat=len(gamma))
        if witness_fails(inst, t, serving, list(zip(gamma, q)))
    }
    minimal = []
    for q in sorted(failing):
        below = (q[:i] + (q[i] - 1,) + q[i + 1:] for i in range(len(q)) if q[i] > 1)
        if not any(p in failing for p in below):
            minimal.append(q)
    return minimal


def separate_gci(inst: Instance, point: Mapping[VarKey, float], max_cluster_size: int = 2,
                 max_interferers: int = 2, tol: float = TOL_CUT) -> List[GubCoverCut]:
    """Find covers violated by a fractional point.

    Args:
        inst: Instance
        point: Values of the x, z, y, v variables (missing keys read as 0)
        max_cluster_size: Largest serving set enumerated
        max_interferers: Largest interfering set enumerated
        tol: Minimum violation reported

    Returns:
        List[GubCoverCut]: Violated cuts, most violated first
    """
    L = inst.num_levels
    found: Dict[GubCoverCut, float] = {}
    for t in range(inst.num_terminals):
        x_t = point.get(x_key(t), 0.0)
        if x_t <= tol:
            continue
        # A cut is violated only if each serving and interfering term exceeds 1 - x_t.
        threshold = 1.0 - x_t
        v_prefix = {}
        serving_candidates = []
        for b in range(inst.num_bases):
            prefix = np.cumsum([point.get(v_key(t, b, l), 0.0) for l in range(1, L + 1)])
            if prefix[-1] > threshold:
                v_prefix[b] = prefix
                serving_candidates.append(b)
        interferer_candidates = [
            g for g in range(inst.num_bases)
            if sum(point.get(z_key(g, l), 0.0) for l in range(1, L + 1)) > threshold
        ]
        if not serving_candidates:
            continue

        for size in range(1, max_cluster_size + 1):
            for delta in itertools.combinations(serving_candidates, size):
                lam_choices = [[lam for lam in range(1, L + 1) if v_prefix[b][lam - 1] > threshold] for b in delta]
                for lams in itertools.product(*lam_choices):
                    serving = tuple(zip(delta, lams))
                    if witness_fails(inst, t, serving):
                        cut = GubCoverCut(t, serving)
                        found.setdefault(cut, cut.violation(inst, point))
                        continue
                    others = [g for g in interferer_candidates if g not in delta]
                    for k in range(1, max_interferers + 1):
                        for gamma in itertools.combinations(others, k):
                            for q in _minimal_failing_levels(inst, t, serving, gamma):
                                interfering = tuple(zip(gamma, q))
                                # Skip covers that stay covers without one of their interferers.
                                if k > 1 and any(
                                    witness_fails(inst, t, serving, interfering[:j] + interfering[j + 1:])
                                    for j in range(k)
                                ):
                                    continue
                                cut = GubCoverCut(t, serving, interfering)
                                found.setdefault(cut, cut.violation(inst, point))

    violated = [(viol, cut) for cut, viol in found.items() if viol > tol]
    violated.sort(key=lambda item: (-item[0], item[1].terminal, item[1].serving, item[1].interfering))
    logger.debug(f"Separation found {len(violated)} violated GCIs out of {len(found)} covers")
    return [cut for _, cut in violated]


def is_valid_cut(inst: Instance, cut: GubCoverCut, cap: int = VALIDITY_CHECK_CAP) -> bool:
    """Exhaustively check a cut against every (z, y) with derived (x, v).

    The row only involves t's variables, so clusters of other terminals are
    not enumerated. Raises ValueError above `cap` configurations.
    """
    B, L = inst.num_bases, inst.num_levels
    if (L + 1) ** B * 2 ** B > cap:
        raise ValueError(f"validity check needs {(L + 1) ** B * 2 ** B} configurations, cap is {cap}")
    t = cut.terminal
    terms = cut.row_terms(inst)
    for levels in itertools.product(range(L + 1), repeat=B):
        powers = inst.powers(levels)
        for members in itertools.product((False, True), repeat=B):
            cluster = [b for b in range(B) if members[b]]
            point: Dict[VarKey, float] = {x_key(t): float(is_served(inst, powers, cluster, t))}
            for b in range(B):
                point[y_key(t, b)] = float(members[b])
                for l in range(1, L + 1):
                    point[z_key(b, l)] = float(levels[b] == l)
                    point[v_key(t, b, l)] = float(levels[b] == l and members[b])
            lhs = sum(coef * point[key] for key, coef in terms.items())
            if lhs > cut.rhs + TOL_CUT:
                return False
    return True


def add_cuts(model: MipModel, inst: Instance, cuts: Sequence[GubCoverCut], prefix: str = "gci") -> int:
    """Append cut rows to a model, skipping cuts on terminals it does not hold."""
    added = 0
    for cut in cuts:
        if x_key(cut.terminal) not in model.var_index:
            continue
        model.add_row(cut.row_terms(inst), "<=", cut.rhs, name=f"{prefix}_{model.num_rows}")
        added += 1
    return added


def cuts_to_text(inst: Instance, cuts: Sequence[GubCoverCut]) -> str:
    return "".join(cut.to_text(inst) + "\n" for cut in cuts)


def parse_cut(inst: Instance, line: str, line_no: Optional[int] = None) -> GubCoverCut:
    """Inverse of GubCoverCut.to_text."""
    parts = [p.strip() for p in line.split("|")]
    head = parts[0].split()
    if len(head) != 2 or head[0] != "GCI" or len(parts) > 3:
        raise InstanceFormatError(f"malformed cut line '{line.strip()}'", line=line_no)
    base_pos = {bid: b for b, bid in enumerate(inst.bases)}
    term_pos = {tid: t for t, tid in enumerate(inst.terminals)}

    def pairs(chunk: str, field: str) -> Tuple[Tuple[int, int], ...]:
        out = []
        for token in chunk.split():
            bid, _, level = token.partition(":")
            if bid not in base_pos or not level.isdigit() or not 1 <= int(level) <= inst.num_levels:
                raise InstanceFormatError(f"bad entry '{token}'", line=line_no, field=field)
            out.append((base_pos[bid], int(level)))
        return tuple(out)

    if head[1] not in term_pos:
        raise InstanceFormatError(f"unknown terminal '{head[1]}'", line=line_no, field="terminal")
    serving = pairs(parts[1], "serving") if len(parts) > 1 else ()
    interfering = pairs(parts[2], "interfering") if len(parts) > 2 else ()
    try:
        return GubCoverCut(term_pos[head[1]], serving, interfering)
    except ValueError as e:
        raise InstanceFormatError(str(e), line=line_no) from None
