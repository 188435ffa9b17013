import json

import pytest

from scripts import spcap_cli
from conftest import make_small, make_tiny1
from utils.data_utils import read_text_file
from utils.formulation_utils import load_solution
from utils.instance_utils import GenConfig, generate_instance, read_instance_file, write_instance_file
from utils.report_utils import ReportRow, RunReport


@pytest.fixture
def tiny1_file(tmp_path):
    path = tmp_path / "TINY1.spcap"
    write_instance_file(make_tiny1(), str(path))
    return str(path)


@pytest.fixture
def small_file(tmp_path):
    path = tmp_path / "small.spcap"
    write_instance_file(make_small(seed=3), str(path))
    return str(path)


def test_generate_writes_a_loadable_instance(tmp_path, capsys):
    out = tmp_path / "gen" / "syn.spcap"
    code = spcap_cli.main(["generate", "--out", str(out), "--terminals", "3", "--bases", "2", "--levels", "2",
                           "--seed", "5"])
    assert code == 0
    assert capsys.readouterr().out.strip() == str(out)
    inst = read_instance_file(str(out))
    assert (inst.num_terminals, inst.num_bases, inst.num_levels) == (3, 2, 2)


def test_generate_reads_a_config_file(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("num_terminals=2\nnum_bases=4\nseed=1\n", encoding="utf-8")
    out = tmp_path / "syn.spcap"
    assert spcap_cli.main(["generate", "--out", str(out), "--config", str(cfg), "--bases", "3"]) == 0
    inst = read_instance_file(str(out))
    assert (inst.num_terminals, inst.num_bases) == (2, 3)


def test_bounds_table_and_dumps(tiny1_file, small_file, tmp_path, capsys):
    cuts_dir = tmp_path / "cuts"
    lp_dir = tmp_path / "lp"
    code = spcap_cli.main(["bounds", tiny1_file, small_file, "--out", "csv",
                           "--dump_cuts", str(cuts_dir), "--dump_lp", str(lp_dir)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "ID,|T|,|B|,PI-bound,BM-bound,Cuts,Rounds,PI<=BM"
    assert lines[1].startswith("TINY1,1,2,")
    assert lines[2].startswith("small,")
    assert len(lines) == 3
    cuts = read_text_file(str(cuts_dir / "TINY1.cuts"))
    assert all(line.startswith("GCI t1 |") for line in cuts.splitlines() if line.strip())
    assert (lp_dir / "small.lp").exists()


def test_oracle_solve_writes_outputs(tiny1_file, tmp_path, capsys):
    report = tmp_path / "report.csv"
    solution = tmp_path / "best.sol"
    summary = tmp_path / "summary.json"
    code = spcap_cli.main(["solve", tiny1_file, "--mode", "oracle", "--report", str(report),
                           "--solution", str(solution), "--summary", str(summary)])
    assert code == 0
    assert "TINY1" in capsys.readouterr().out
    row = RunReport.from_csv(read_text_file(str(report))).rows[0]
    assert row.objective == pytest.approx(10.0)
    assert row.served_aco is None
    sol = load_solution(make_tiny1(), read_text_file(str(solution)))
    assert sol.num_served == 1
    data = json.loads(summary.read_text(encoding="utf-8"))
    assert data["mode"] == "oracle"
    assert data["objective"] == pytest.approx(10.0)
    assert "rins" not in data


def test_hybrid_runs_are_byte_identical_for_a_seed(small_file, tmp_path):
    outputs = []
    for run in ("a", "b"):
        report = tmp_path / f"{run}.csv"
        log = tmp_path / f"{run}_log.csv"
        code = spcap_cli.main(["solve", small_file, "--mode", "hybrid", "--seed", "7", "--loops", "2",
                               "--out", "csv", "--report", str(report), "--log_csv", str(log)])
        assert code == 0
        outputs.append((report.read_bytes(), log.read_bytes()))
    assert outputs[0] == outputs[1]
    header = outputs[0][1].decode().splitlines()[0]
    assert header == "iteration,ant,ant_value,rins_value,best_so_far,elapsed_seconds"


def test_hybrid_summary_counts_rins_calls(tiny1_file, tmp_path):
    summary = tmp_path / "summary.json"
    assert spcap_cli.main(["solve", tiny1_file, "--loops", "3", "--summary", str(summary)]) == 0
    data = json.loads(summary.read_text(encoding="utf-8"))
    assert data["iterations"] == 3
    assert data["rins"]["calls"] == 3
    assert data["objective"] <= data["pi_bound"] + 1e-6
    assert data["bound_violations"] == []


def test_report_merges_csv_files(tmp_path, capsys):
    paths = []
    for name, objective in (("a", 1.0), ("b", 2.0)):
        path = tmp_path / f"{name}.csv"
        path.write_text(RunReport([ReportRow(name, 2, 2, None, 1, 1, objective, 3.0)]).to_csv(), encoding="utf-8")
        paths.append(str(path))
    merged = tmp_path / "merged.csv"
    assert spcap_cli.main(["report", *paths, "--out", "csv", "--save", str(merged)]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 3
    assert [row.instance_id for row in RunReport.from_csv(read_text_file(str(merged))).rows] == ["a", "b"]


def test_usage_errors_exit_with_one(tiny1_file, tmp_path):
    assert spcap_cli.main([]) == 1
    assert spcap_cli.main(["solve", tiny1_file, "--mode", "magic"]) == 1
    assert spcap_cli.main(["solve", tiny1_file, "--alpha", "2"]) == 1
    assert spcap_cli.main(["generate", "--out", str(tmp_path / "x.spcap"), "--terminals", "0"]) == 1
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta=1\n", encoding="utf-8")
    assert spcap_cli.main(["solve", tiny1_file, "--config", str(cfg)]) == 1


def test_data_errors_exit_with_two(tmp_path):
    assert spcap_cli.main(["solve", str(tmp_path / "missing.spcap")]) == 2
    broken = tmp_path / "broken.spcap"
    broken.write_text("SPCAP v1 1 2 2\nLEVELS 1 two\n", encoding="utf-8")
    assert spcap_cli.main(["bounds", str(broken)]) == 2


def test_oracle_cap_exits_with_three(tmp_path):
    path = tmp_path / "wide.spcap"
    write_instance_file(generate_instance(GenConfig(num_terminals=2, num_bases=16, num_levels=1)), str(path))
    assert spcap_cli.main(["solve", str(path), "--mode", "oracle"]) == 3
