"""Verification reports and deterministic tabular output."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List

import numpy as np

__all__ = ["Check", "ScenarioResult", "VerificationReport", "format_float", "write_csv",
           "write_json", "csv_text"]


def format_float(x):
    """17 significant digits: lossless round trip for IEEE doubles."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


@dataclass
class Check:
    """One measured quantity against its threshold.

    ``mode`` is ``"max"`` when the value must not exceed the threshold and
    ``"min"`` for negative controls that must reach it.
    """

    name: str
    value: float
    threshold: float
    mode: str = "max"

    @property
    def passed(self):
        if not math.isfinite(self.value):
            return False
        return self.value <= self.threshold if self.mode == "max" else self.value >= self.threshold

    def line(self):
        op = "<=" if self.mode == "max" else ">="
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}: {self.value:.3e} {op} {self.threshold:.1e}"

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


@dataclass
class ScenarioResult:
    scenario: str
    checks: List[Check] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str = ""

    @property
    def passed(self):
        return not self.error and all(c.passed for c in self.checks)

    def to_dict(self):
        return {"scenario": self.scenario, "passed": self.passed, "seconds": self.seconds,
                "error": self.error, "stats": self.stats,
                "checks": [c.to_dict() for c in self.checks]}


@dataclass
class VerificationReport:
    """Aggregate of scenario results; passes iff every check passes."""

    suite: str
    scenarios: List[ScenarioResult] = field(default_factory=list)
    conventions: dict = field(default_factory=dict)
    fault_injected: bool = False

    @property
    def passed(self):
        return bool(self.scenarios) and all(s.passed for s in self.scenarios)

    @property
    def checks(self):
        return [c for s in self.scenarios for c in s.checks]

    def lines(self):
        out = []
        for s in sorted(self.scenarios, key=lambda r: r.scenario):
            out.append(f"[{s.scenario}] {s.seconds:.1f}s")
            if s.error:
                out.append(f"FAIL  error: {s.error}")
            out += ["  " + c.line() for c in s.checks]
        n_fail = sum(not c.passed for c in self.checks) + sum(bool(s.error) for s in self.scenarios)
        out.append(f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'} "
                   f"({len(self.checks)} checks, {n_fail} failed)")
        return out

    def to_dict(self):
        return {"suite": self.suite, "passed": self.passed, "fault_injected": self.fault_injected,
                "conventions": self.conventions,
                "scenarios": [s.to_dict() for s in sorted(self.scenarios, key=lambda r: r.scenario)]}


def csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(x) if isinstance(x, (int, float, np.number)) else x for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows):
    Path(path).write_text(csv_text(columns, rows), encoding="utf-8", newline="\n")


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                          encoding="utf-8")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")
