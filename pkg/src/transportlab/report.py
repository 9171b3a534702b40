"""Run reports and their JSON and CSV encodings."""

import csv
import io
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .checks import failed_result, get_check, run_suite
from .config import build_pairs

CSV_COLUMNS = ("name", "kind", "lhs", "rhs", "margin", "rel_gap", "tolerance", "status", "params")


@dataclass
class Report:
    version: str
    config_digest: str
    results: list
    wall_time_s: float

    @property
    def summary(self):
        passed = sum(r.passed for r in self.results)
        return {"total": len(self.results), "passed": passed, "failed": len(self.results) - passed}

    @property
    def all_passed(self):
        return all(r.passed for r in self.results)

    def to_dict(self):
        return {
            "tool": "transportlab",
            "version": self.version,
            "config_digest": self.config_digest,
            "summary": self.summary,
            "results": [r.to_dict() for r in self.results],
            "wall_time_s": self.wall_time_s,
        }


def _plain(obj):
    """JSON-safe copy: numpy to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(report):
    return json.dumps(_plain(report.to_dict()), indent=2, sort_keys=True) + "\n"


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def to_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.results:
        row = r.to_dict()
        row["params"] = json.dumps(_plain(row["params"]), sort_keys=True)
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_report(report, json_path=None, csv_path=None):
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(to_json(report))
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            fh.write(to_csv(report))


def execute(config, workers=None):
    """Build the configured pairs, run every check and assemble a :class:`Report`."""
    start = time.perf_counter()
    pairs, errors = build_pairs(config)
    runnable = [s for s in config.checks if s.pair in pairs]
    results = iter(run_suite(runnable, pairs, workers=workers))
    ordered = []
    for spec in config.checks:
        if spec.pair in pairs:
            ordered.append(next(results))
        else:
            ordered.append(failed_result(spec.name, get_check(spec.name).kind,
                                         {"pair": spec.pair, **spec.params}, errors[spec.pair]))
    return Report(__version__, config.digest, ordered, time.perf_counter() - start)
