import io
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from utils.instance_utils import Instance

logger = logging.getLogger(__name__)

# Display header, in output order, for each ReportRow field.
COLUMNS = {
    "instance_id": "ID",
    "num_terminals": "|T|",
    "num_bases": "|B|",
    "served_aco": "|T*| (ACO)",
    "served_rins": "|T*| (ACO+RINS)",
    "coverage_pct": "Cov%",
    "max_cluster": "Max size cluster",
    "objective": "Objective",
    "pi_bound": "PI-bound",
    "wall_time": "Time (s)",
}
HEADER = list(COLUMNS.values())


@dataclass
class ReportRow:
    """One report line.

    served_aco counts the served terminals of the ant solution with the best
    objective before RINS, not the largest ant coverage; served_rins and
    max_cluster describe the final solution.
    """

    instance_id: str
    num_terminals: int
    num_bases: int
    served_aco: Optional[int]
    served_rins: int
    max_cluster: int
    objective: float
    pi_bound: Optional[float]
    wall_time: Optional[float] = None

    @property
    def coverage(self) -> float:
        return self.served_rins / self.num_terminals if self.num_terminals else 0.0


@dataclass
class RunReport:
    rows: List[ReportRow] = field(default_factory=list)

    def add(self, row: ReportRow) -> None:
        self.rows.append(row)

    def extend(self, other: "RunReport") -> None:
        self.rows.extend(other.rows)

    def to_frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            record = asdict(row)
            record["coverage_pct"] = round(100.0 * row.coverage, 2)
            records.append({COLUMNS[key]: record[key] for key in COLUMNS})
        frame = pd.DataFrame(records, columns=HEADER)
        frame["|T*| (ACO)"] = pd.array([row.served_aco for row in self.rows], dtype="Int64")
        return frame

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False)

    def to_table(self) -> str:
        frame = self.to_frame()
        if frame.empty:
            return " ".join(HEADER)
        return frame.to_string(index=False, na_rep="-")

    @classmethod
    def from_csv(cls, text: str) -> "RunReport":
        """Parse a report written by to_csv; Cov% is recomputed, not read."""
        frame = pd.read_csv(io.StringIO(text), float_precision="round_trip", dtype={"ID": str})
        missing = [column for column in HEADER if column not in frame.columns]
        if missing:
            raise ValueError(f"report CSV lacks columns {missing}")
        report = cls()
        for record in frame.to_dict(orient="records"):
            report.add(ReportRow(
                instance_id=str(record["ID"]),
                num_terminals=int(record["|T|"]),
                num_bases=int(record["|B|"]),
                served_aco=_optional(record["|T*| (ACO)"], int),
                served_rins=int(record["|T*| (ACO+RINS)"]),
                max_cluster=int(record["Max size cluster"]),
                objective=float(record["Objective"]),
                pi_bound=_optional(record["PI-bound"], float),
                wall_time=_optional(record["Time (s)"], float),
            ))
        return report

    def violations(self, tol: float = 1e-6) -> List[str]:
        """Rows whose objective exceeds their PI-bound."""
        return [
            f"{row.instance_id}: objective {row.objective} > PI-bound {row.pi_bound}"
            for row in self.rows
            if row.pi_bound is not None and row.objective > row.pi_bound + tol
        ]


def _optional(value: Any, convert) -> Optional[Any]:
    if value is None or (isinstance(value, float) and math.isnan(value)) or value is pd.NA:
        return None
    return convert(value)


def hybrid_row(inst: Instance, result, wall_time: Optional[float] = None) -> ReportRow:
    """Report row for a run_hybrid result; served_aco comes from best_ant, the best-objective ant."""
    return ReportRow(
        instance_id=inst.name,
        num_terminals=inst.num_terminals,
        num_bases=inst.num_bases,
        served_aco=result.best_ant.num_served,
        served_rins=result.best.num_served,
        max_cluster=result.best.max_cluster_size,
        objective=result.best_value,
        pi_bound=result.pi_value,
        wall_time=wall_time,
    )


def solution_row(inst: Instance, solution, objective: float, pi_value: Optional[float] = None,
                 wall_time: Optional[float] = None) -> ReportRow:
    """Report row for exact or oracle solves, which have no ant phase."""
    return ReportRow(
        instance_id=inst.name,
        num_terminals=inst.num_terminals,
        num_bases=inst.num_bases,
        served_aco=None,
        served_rins=solution.num_served,
        max_cluster=solution.max_cluster_size,
        objective=objective,
        pi_bound=pi_value,
        wall_time=wall_time,
    )


def rins_gain_summary(gains: List[float], ant_values: List[float]) -> Dict[str, float]:
    """Mean absolute and relative objective gain of mod-RINS over ant solutions."""
    relative = [g / abs(a) for g, a in zip(gains, ant_values) if abs(a) > 1e-12]
    return {
        "calls": len(gains),
        "mean_gain": sum(gains) / len(gains) if gains else 0.0,
        "mean_relative_gain": sum(relative) / len(relative) if relative else 0.0,
        "improved_calls": sum(1 for g in gains if g > 1e-9),
    }
