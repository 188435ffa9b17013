import pytest

from utils.aco_utils import HybridResult
from utils.formulation_utils import derive_full_solution
from utils.report_utils import HEADER, ReportRow, RunReport, hybrid_row, rins_gain_summary, solution_row


def make_row(**changes):
    values = dict(instance_id="syn_1", num_terminals=4, num_bases=3, served_aco=2, served_rins=3,
                  max_cluster=2, objective=2.6, pi_bound=3.1, wall_time=None)
    values.update(changes)
    return ReportRow(**values)


def test_header_order():
    assert RunReport().to_csv().strip() == ",".join(HEADER)
    assert HEADER[0] == "ID"
    assert HEADER[-1] == "Time (s)"


def test_coverage_percent_column():
    frame = RunReport([make_row()]).to_frame()
    assert frame.loc[0, "Cov%"] == 75.0
    assert make_row(num_terminals=0, served_rins=0).coverage == 0.0


def test_csv_keeps_missing_values_empty():
    text = RunReport([make_row(served_aco=None, pi_bound=None)]).to_csv()
    line = text.splitlines()[1]
    assert line == "syn_1,4,3,,3,75.0,2,2.6,,"


def test_csv_parses_back():
    rows = [make_row(), make_row(instance_id="007", served_aco=None, wall_time=1.5, objective=0.1 + 0.2)]
    parsed = RunReport.from_csv(RunReport(rows).to_csv())
    assert parsed.rows == rows


def test_missing_columns_are_rejected():
    with pytest.raises(ValueError):
        RunReport.from_csv("ID,|T|\nx,1\n")


def test_violations_list_rows_above_their_bound():
    report = RunReport([make_row(), make_row(instance_id="bad", objective=3.5), make_row(pi_bound=None)])
    problems = report.violations()
    assert len(problems) == 1
    assert problems[0].startswith("bad:")


def test_table_rendering():
    assert RunReport().to_table() == " ".join(HEADER)
    table = RunReport([make_row(served_aco=None)]).to_table()
    assert "syn_1" in table


def test_solution_row_has_no_ant_phase(tiny1):
    sol = derive_full_solution(tiny1, [2, 0], [{0}])
    row = solution_row(tiny1, sol, 10.0, 10.2)
    assert row.served_aco is None
    assert row.served_rins == 1
    assert row.max_cluster == 1
    assert row.instance_id == "TINY1"


def test_hybrid_row_counts_the_best_objective_ant(tiny1):
    result = HybridResult(
        best=derive_full_solution(tiny1, [2, 0], [{0}]),
        best_value=10.0,
        best_ant=derive_full_solution(tiny1, [0, 0], [set()]),
        best_ant_value=0.0,
        pi_value=10.2,
        log=[],
        iterations=1,
    )
    row = hybrid_row(tiny1, result)
    assert row.served_aco == 0
    assert row.served_rins == 1
    assert row.objective == 10.0


def test_rins_gain_summary():
    summary = rins_gain_summary([0.0, 2.0, 1.0], [4.0, 4.0, 0.0])
    assert summary["calls"] == 3
    assert summary["mean_gain"] == pytest.approx(1.0)
    assert summary["mean_relative_gain"] == pytest.approx(0.25)
    assert summary["improved_calls"] == 2
    assert rins_gain_summary([], [])["mean_gain"] == 0.0
