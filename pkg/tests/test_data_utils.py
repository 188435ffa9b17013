import json
import os

import pandas as pd

from utils.data_utils import output_path, read_text_file, save_frame_to_csv, save_json_to_file, save_text_to_file


def test_output_path():
    assert output_path("out", "syn", ".csv") == os.path.join("out", "syn.csv")
    assert output_path("out", "batch_hybrid", ".csv", "20260101_0900") == os.path.join("out", "batch_hybrid_20260101_0900.csv")


def test_writers_create_parent_directories(tmp_path):
    text_file = tmp_path / "a" / "b" / "sol.txt"
    save_text_to_file("OBJ 1\n", str(text_file))
    assert read_text_file(str(text_file)) == "OBJ 1\n"

    json_file = tmp_path / "c" / "summary.json"
    save_json_to_file({"objective": 10.0, "mode": "oracle"}, str(json_file))
    assert json.loads(json_file.read_text(encoding="utf-8")) == {"objective": 10.0, "mode": "oracle"}

    csv_file = tmp_path / "d" / "log.csv"
    save_frame_to_csv(pd.DataFrame({"iteration": [1, 2], "ant_value": [0.5, 0.75]}), str(csv_file))
    assert csv_file.read_text(encoding="utf-8").splitlines() == ["iteration,ant_value", "1,0.5", "2,0.75"]
