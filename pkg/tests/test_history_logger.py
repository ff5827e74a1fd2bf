import csv
import json

from screen_rating.history_logger import HistoryLogger, write_json, write_rows


def test_header_written_once_and_json_mirrored(tmp_path):
    logger = HistoryLogger(tmp_path / "run")
    logger.log({"epoch": 1, "mae": 0.5})
    logger.log({"epoch": 2, "mae": 0.25})

    lines = logger.csv_file.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "timestamp,epoch,mae"
    assert len(lines) == 3
    entries = json.loads(logger.json_file.read_text(encoding="utf-8"))
    assert [e["epoch"] for e in entries] == [1, 2]
    assert [r["mae"] for r in logger.read_rows()] == ["0.5", "0.25"]


def test_without_timestamps_rows_are_reproducible(tmp_path):
    for name in ("a", "b"):
        HistoryLogger(tmp_path / name, timestamps=False).log_many([{"x": 1}, {"x": 2}])
    assert (tmp_path / "a" / "history.csv").read_bytes() == \
        (tmp_path / "b" / "history.csv").read_bytes()


def test_overwrite_starts_fresh(tmp_path):
    HistoryLogger(tmp_path, timestamps=False).log({"x": 1})
    logger = HistoryLogger(tmp_path, timestamps=False, overwrite=True)
    logger.log({"x": 2})
    assert logger.read_rows() == [{"x": "2"}]


def test_corrupt_json_mirror_is_replaced(tmp_path):
    logger = HistoryLogger(tmp_path, timestamps=False)
    logger.json_file.write_text("{oops", encoding="utf-8")
    logger.log({"x": 1})
    assert json.loads(logger.json_file.read_text(encoding="utf-8")) == [{"x": 1}]


def test_write_rows_collects_columns_in_order(tmp_path):
    path = write_rows(tmp_path / "out" / "t.csv", [{"a": 1}, {"b": 2, "a": 3}])
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == ["a", "b"]
        assert list(reader)[1] == {"a": "3", "b": "2"}


def test_write_json_sorts_keys(tmp_path):
    path = write_json(tmp_path / "r.json", {"b": 1, "a": 2})
    assert path.read_text(encoding="utf-8").index('"a"') < path.read_text(encoding="utf-8").index('"b"')
