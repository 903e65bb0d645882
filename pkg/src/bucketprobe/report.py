"""Run reports: rows of computed values, comparisons and pass flags."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

Z_LIMIT = 4.0


@dataclass
class Row:
    name: str
    analytic: float | None = None
    exact: float | None = None
    simulated: float | None = None
    reference: float | None = None
    stderr: float | None = None
    z: float | None = None
    provenance: str = ""
    tolerance: float | None = None
    passed: bool | None = None   # None: informational row, not a comparison
    detail: str = ""


# serialized names; "passed" is written as "pass"
COLUMNS = ["pass" if f.name == "passed" else f.name for f in fields(Row)]


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def _record(row):
    return {("pass" if k == "passed" else k): _plain(v) for k, v in asdict(row).items()}


def compare(name, value, reference, tol, provenance="analytic", detail=""):
    """Row comparing a computed value (stored under its provenance) with a reference."""
    ok = value is not None and reference is not None and abs(value - reference) <= tol
    row = Row(name, reference=reference, provenance=provenance, tolerance=tol,
              passed=bool(ok), detail=detail)
    setattr(row, provenance, value)
    return row


def info(name, value, provenance="analytic", detail="", stderr=None):
    """Informational row without a pass flag."""
    row = Row(name, provenance=provenance, detail=detail, stderr=stderr)
    setattr(row, provenance, value)
    return row


def z_row(name, analytic, simulated, stderr, z=None, limit=Z_LIMIT, flagged=True, detail=""):
    """Row comparing a simulated estimate with its analytic value in standard errors."""
    if z is None:
        z = (simulated - analytic) / stderr if stderr and stderr > 0 else (
            0.0 if simulated == analytic else math.inf)
    return Row(name, analytic=analytic, simulated=simulated, stderr=stderr, z=float(z),
               provenance="simulated", tolerance=limit,
               passed=bool(abs(z) <= limit) if flagged else None, detail=detail)


@dataclass
class RunReport:
    command: str
    parameters: dict
    rows: list = field(default_factory=list)
    wall_time: float | None = None

    @property
    def passed(self):
        return all(r.passed is not False for r in self.rows)

    def failures(self):
        return [r for r in self.rows if r.passed is False]

    def add(self, row):
        self.rows.append(row)
        return row

    def extend(self, rows):
        self.rows.extend(rows)

    def to_dict(self, timing=False):
        d = {"command": self.command, "parameters": self.parameters,
             "pass": self.passed, "rows": [_clean(_record(r)) for r in self.rows]}
        if timing:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), indent=2, ensure_ascii=False) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_cell(v) for v in _record(r).values()])
        return buf.getvalue()


def _clean(d):
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def rows_from_csv(text):
    """Parse CSV output back into rows (used to check both formats agree)."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        kw = {}
        for k, v in rec.items():
            if k in ("name", "provenance", "detail"):
                kw[k] = v
            elif k == "pass":
                kw["passed"] = None if v == "" else v == "true"
            else:
                kw[k] = None if v == "" else float(v)
        out.append(Row(**kw))
    return out


def rows_from_json(text):
    out = []
    for rec in json.loads(text)["rows"]:
        rec = dict(rec)
        rec["passed"] = rec.pop("pass")
        out.append(Row(**rec))
    return out
