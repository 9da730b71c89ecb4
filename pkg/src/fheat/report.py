"""Check outcomes and their JSON / CSV serialisation."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np

SCHEMA_VERSION = 1

# tolerance policy
TOL_REL_ANALYTIC = 1e-6  # one side of the inequality is closed form
TOL_REL_QUADRATURE = 1e-3  # both sides come from quadrature
TOL_MONO = 1e-9  # relative, per step of a monotone sequence


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def digest(inputs: dict) -> str:
    blob = json.dumps(jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class BoundReport:
    """Outcome of one inequality check or constant fit.

    ``kind`` is ``hard`` (pass means measured <= bound within tolerance),
    ``fitted`` (the constant is estimated, pass means it is stable) or
    ``expected`` (a documented deviation such as Dirichlet mass loss).
    ``margin`` is ``1 - measured/bound`` and may be computed in log space.
    """

    name: str
    anchor: str
    inputs: dict
    measured: float
    bound: float
    passed: bool
    kind: str = "hard"
    margin: float = float("nan")
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return digest(self.inputs)

    @property
    def key(self):
        return (self.name, self.digest)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["digest"] = self.digest
        d["pass"] = d.pop("passed")
        return jsonable(d)

    def __bool__(self) -> bool:
        return bool(self.passed)


def log_margin(log_measured: float, log_bound: float) -> float:
    """``1 - measured/bound`` from logarithms, safe for huge or tiny sides."""
    diff = log_measured - log_bound
    if diff > 700:
        return -math.inf
    return -math.expm1(diff)


def sort_reports(reports: Iterable[BoundReport]) -> list:
    return sorted(reports, key=lambda r: r.key)


def reports_to_json(reports: Iterable[BoundReport]) -> str:
    rows = [r.to_dict() for r in sort_reports(reports)]
    return json.dumps({"schema_version": SCHEMA_VERSION, "reports": rows},
                      indent=2, sort_keys=True) + "\n"


CSV_FIELDS = ("name", "digest", "kind", "measured", "bound", "margin", "pass", "anchor")


def reports_to_csv(reports: Iterable[BoundReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in sort_reports(reports):
        d = r.to_dict()
        writer.writerow({k: d[k] for k in CSV_FIELDS})
    return buf.getvalue()


def summary_table(reports: Iterable[BoundReport]) -> str:
    lines = [f"{'check':<28} {'kind':<8} {'measured':>14} {'bound':>14}  result"]
    for r in sort_reports(reports):
        verdict = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<28} {r.kind:<8} {r.measured:>14.6g} {r.bound:>14.6g}  {verdict}")
    return "\n".join(lines)
