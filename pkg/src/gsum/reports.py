"""Machine-readable run reports.

Reports are deterministic: canonical JSON (sorted keys, native float repr),
no timestamps, provenance limited to seeds and the package version, written
atomically (temp file + rename) so failed runs leave no partial output.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

VERSION = "0.1.0"

PASS = "pass"
FAIL = "fail"
INDETERMINATE = "indeterminate"


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class Report:
    """Self-contained record of one command run."""

    command: str
    config: dict
    metrics: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    seed: int | None = None

    def add_metric(self, name: str, value):
        self.metrics[name] = _jsonable(value)

    def add_verdict(self, name: str, passed, metric: str, threshold,
                    comparison: str = "<=", indeterminate: bool = False):
        """Record a verdict tied to a metric already present in the report."""
        if metric not in self.metrics:
            self.add_metric(metric, None)
        status = INDETERMINATE if indeterminate else (PASS if passed else FAIL)
        self.verdicts[name] = {
            "status": status,
            "metric": metric,
            "threshold": _jsonable(threshold),
            "comparison": comparison,
        }

    def all_passed(self) -> bool:
        return all(v["status"] == PASS for v in self.verdicts.values())

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "config": _jsonable(self.config),
            "metrics": self.metrics,
            "verdicts": self.verdicts,
            "provenance": {"seed": self.seed, "version": VERSION},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gsum-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: Report, path: str):
    atomic_write_text(path, report.to_json())


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_jsonable(v) for v in row])
    return buf.getvalue()
