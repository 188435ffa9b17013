from utils import supabase_utils
from utils.report_utils import ReportRow, RunReport
from utils.supabase_utils import RUNS_TABLE, filter_schema_fields, report_records, save_run_report


class FakeResult:
    def __init__(self, data):
        self.data = data


class FakeTable:
    def __init__(self, client, name):
        self.client = client
        self.name = name

    def insert(self, records):
        self.client.inserted.append((self.name, records))
        return self

    def execute(self):
        if self.client.fail:
            raise RuntimeError("connection refused")
        return FakeResult(self.client.inserted[-1][1])


class FakeClient:
    def __init__(self, fail=False):
        self.inserted = []
        self.fail = fail

    def table(self, name):
        return FakeTable(self, name)


def make_report():
    return RunReport([ReportRow("syn_1", 4, 3, 2, 3, 2, 2.6, 3.1)])


def test_records_merge_meta_and_drop_unknown_fields():
    records = report_records(make_report(), {"mode": "hybrid", "seed": 7, "host": "ignored"})
    assert len(records) == 1
    record = records[0]
    assert record["instance_id"] == "syn_1"
    assert record["coverage"] == 0.75
    assert record["mode"] == "hybrid"
    assert record["seed"] == 7
    assert "host" not in record


def test_filter_passes_unknown_tables_through():
    assert filter_schema_fields({"a": 1}, "other") == {"a": 1}
    assert filter_schema_fields({"objective": 1, "a": 1}, RUNS_TABLE) == {"objective": 1}


def test_save_run_report_inserts_rows():
    client = FakeClient()
    assert save_run_report(make_report(), {"mode": "oracle"}, client=client)
    name, records = client.inserted[0]
    assert name == RUNS_TABLE
    assert records[0]["mode"] == "oracle"


def test_save_run_report_failures(monkeypatch):
    assert not save_run_report(RunReport(), client=FakeClient())
    assert not save_run_report(make_report(), client=FakeClient(fail=True))

    monkeypatch.delenv("SUPABASE_URL", raising=False)
    monkeypatch.delenv("SUPABASE_KEY", raising=False)
    assert supabase_utils.get_supabase_client() is None
    assert not save_run_report(make_report())
