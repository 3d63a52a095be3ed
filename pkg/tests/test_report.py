import json

from lorentzlab import report
from lorentzlab.fncore import AnalyticWeight
from lorentzlab.weights import delta2_constant


def test_config_hash_order_independent():
    assert report.config_hash({"a": 1, "b": 2}) == report.config_hash({"b": 2, "a": 1})
    assert report.config_hash({"a": 1}) != report.config_hash({"a": 2})


def test_timestamp_separate_and_strippable():
    cfg = {"seed": 3, "n": 8, "L": 16}
    a = report.dumps(report.build_report("x", cfg, {"v": 1.0}))
    b = report.dumps(report.build_report("x", cfg, {"v": 1.0}, timestamp=False))
    assert "timestamp" in json.loads(a) and "timestamp" not in json.loads(b)
    assert report.strip_timestamp(a) == report.strip_timestamp(b)


def test_series_rows_from_class_verdict(tmp_path):
    res = delta2_constant(AnalyticWeight("power", 1.0), 4).to_dict()
    rows = report.series_rows(res)
    assert len(rows) == len(res["scales"])
    path = tmp_path / "s.csv"
    report.write_csv(path, rows)
    back = report.read_csv(path)
    assert [float(r["value"]) for r in back] == [float(r["value"]) for r in rows]
    assert list(back[0]) == list(report.CSV_COLUMNS)
