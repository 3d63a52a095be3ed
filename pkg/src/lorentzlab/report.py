"""JSON reports and CSV series.

A report is deterministic given its config: keys are sorted, floats are
written by ``json`` and the wall-clock time lives in its own top-level
``timestamp`` field, which is the only thing that differs between reruns.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time

from .verdict import jsonable

SCHEMA = "1"
CSV_COLUMNS = ("source", "family", "scale", "value")


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical(config).encode()).hexdigest()


def build_report(command: str, config: dict, result: dict, timestamp: bool = True) -> dict:
    rep = {
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "config_sha256": config_hash(config),
        "seed": config.get("seed"),
        "resolution": config.get("n"),
        "window": config.get("L"),
        "result": result,
    }
    if timestamp:
        rep["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return jsonable(rep)


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(path, report: dict) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(report))


def strip_timestamp(text: str) -> str:
    d = json.loads(text)
    d.pop("timestamp", None)
    return json.dumps(d, sort_keys=True, indent=2)


def _class_rows(source: str, family: str, rec: dict):
    for s in rec.get("scales", []):
        yield {"source": source, "family": family, "scale": s["scale"], "value": s["estimate"]}


def series_rows(result: dict, source: str = "") -> list[dict]:
    """Flatten per-scale series found in a result: class verdicts, probe families, harness records."""
    rows: list[dict] = []
    if not isinstance(result, dict):
        return rows
    if "class" in result and "scales" in result:
        rows.extend(_class_rows(source or result["class"], result["class"], result))
    if "operator" in result and "families" in result:
        for fid, rec in sorted(result["families"].items()):
            rows.extend(_class_rows(source or result["operator"], fid, rec))
    for key in ("records", "items", "per_epsilon"):
        sub = result.get(key)
        if isinstance(sub, dict):
            for k, v in sorted(sub.items()):
                rows.extend(series_rows(v, f"{source}{'/' if source else ''}{k}"))
    for key in ("H", "condition"):
        sub = result.get(key)
        if isinstance(sub, dict):
            rows.extend(series_rows(sub, f"{source}{'/' if source else ''}{key}"))
    return rows


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
        wr.writeheader()
        for r in rows:
            wr.writerow({k: r.get(k) for k in CSV_COLUMNS})


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            r["scale"] = float(r["scale"])
            r["value"] = float(r["value"])
            out.append(r)
        return out
