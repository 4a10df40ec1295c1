"""Suite reports: case records, canonical JSON, CSV tables and digests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CASE_COLUMNS = ("suite", "case_id", "operation", "inputs_digest", "measured", "tolerance", "passed", "error")


def to_plain(x):
    """JSON-ready copy: complex -> [re, im], numpy -> python, tuples -> lists."""
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_plain(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def canonical_json(obj):
    return json.dumps(to_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=True)


def digest(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


@dataclass
class Case:
    suite: str
    case_id: str
    operation: str
    inputs: dict
    measured: object = None
    tolerance: float = None
    passed: bool = False
    error: str = None
    extra: dict = field(default_factory=dict)
    elapsed: float = field(default=0.0, compare=False)  # wall time, kept out of the record

    def record(self):
        return {
            "suite": self.suite,
            "case_id": self.case_id,
            "operation": self.operation,
            "inputs": to_plain(self.inputs),
            "inputs_digest": digest(self.inputs),
            "measured": to_plain(self.measured),
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "error": self.error,
            "extra": to_plain(self.extra),
        }


@dataclass
class SuiteReport:
    config_digest: str
    version: str
    cases: list = field(default_factory=list)

    def records(self):
        return [c.record() for c in self.cases]

    def summary(self):
        n = len(self.cases)
        ok = sum(1 for c in self.cases if c.passed)
        per = {}
        for c in self.cases:
            s = per.setdefault(c.suite, {"cases": 0, "passed": 0})
            s["cases"] += 1
            s["passed"] += int(c.passed)
        return {"cases": n, "passed": ok, "failed": n - ok, "suites": per}

    @property
    def passed(self):
        return all(c.passed for c in self.cases)

    def payload(self):
        return {
            "config_digest": self.config_digest,
            "version": self.version,
            "summary": self.summary(),
            "cases": self.records(),
        }

    def digest(self):
        return digest(self.payload())


def fmt(x):
    """CSV cell: floats at 17 significant digits, complex as (re, im)."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (complex, np.complexfloating)):
        return f"({float(x.real):.17g}, {float(x.imag):.17g})"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (list, tuple)):
        if len(x) == 2 and all(isinstance(v, (float, int)) and not isinstance(v, bool) for v in x):
            return f"({float(x[0]):.17g}, {float(x[1]):.17g})"
        return canonical_json(x)
    if isinstance(x, dict):
        return canonical_json(x)
    return str(x)


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def emit_tables(report, out_dir, formats=("json", "csv"), tables=None):
    """Write report.json, cases.csv and any extra tables {name: (columns, rows)}.

    Returns the list of written paths in a stable order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        payload = report.payload()
        payload["digest"] = report.digest()
        p = out / "report.json"
        p.write_text(json.dumps(to_plain(payload), sort_keys=True, indent=1) + "\n")
        written.append(p)
    if "csv" in formats:
        recs = report.records()
        p = out / "cases.csv"
        p.write_text(csv_text(CASE_COLUMNS, recs))
        written.append(p)
        for name in sorted(tables or {}):
            cols, rows = tables[name]
            p = out / f"{name}.csv"
            p.write_text(csv_text(cols, rows))
            written.append(p)
    return written
