"""Serialization of validation reports to JSON and CSV."""

from __future__ import annotations

import csv
import io
import json
import platform
from datetime import datetime, timezone

import numpy as np

from .. import __version__
from .montecarlo import ValidationReport


def payload(rep: ValidationReport) -> dict:
    """Everything that is a deterministic function of the configuration."""
    return {
        "config": rep.config,
        "analytic": rep.budget.to_dict(),
        "empirical": rep.stats.to_dict(),
        "diagnostics": rep.diagnostics,
        "flags": rep.flags,
        "passed": rep.passed,
    }


def metadata(rep: ValidationReport) -> dict:
    return {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "runtime_s": rep.runtime_s,
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def dumps_payload(rep: ValidationReport) -> str:
    return json.dumps(payload(rep), sort_keys=True, indent=2)


def to_json(rep: ValidationReport) -> str:
    return json.dumps({"payload": payload(rep), "metadata": metadata(rep)}, sort_keys=True, indent=2)


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, value))


def to_csv(rep: ValidationReport) -> str:
    """Two-column ``key,value`` flattening of the payload."""
    rows = []
    _flatten("", payload(rep), rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def render(rep: ValidationReport, fmt: str = "json") -> str:
    return to_csv(rep) if fmt == "csv" else to_json(rep)
