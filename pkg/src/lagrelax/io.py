"""Trace CSV and JSON run summaries."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .core import RunTrace, duality_gap

TRACE_COLUMNS = ("k", "dual", "primal", "best_dual", "best_primal", "gap", "step_size", "violations")


def _cell(x) -> str:
    return "" if x is None else repr(float(x))


def trace_rows(trace: RunTrace) -> list:
    rows = []
    for r in trace.records:
        rows.append({
            "k": str(r.k),
            "dual": _cell(r.dual),
            "primal": _cell(r.primal),
            "best_dual": _cell(r.best_dual),
            "best_primal": _cell(r.best_primal),
            "gap": _cell(r.gap),
            "step_size": _cell(r.step_size),
            "violations": str(r.violation_count),
        })
    return rows


def trace_to_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TRACE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(trace_rows(trace))
    return buf.getvalue()


def write_trace_csv(trace: RunTrace, path) -> None:
    Path(path).write_text(trace_to_csv(trace), encoding="utf-8")


def read_trace_csv(path) -> list:
    """Rows as dicts with floats (None for empty cells) and ints for k/violations."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns {reader.fieldnames}")
        out = []
        for row in reader:
            parsed = {}
            for key, val in row.items():
                if key in ("k", "violations"):
                    parsed[key] = int(val)
                else:
                    parsed[key] = None if val == "" else float(val)
            out.append(parsed)
    return out


def summary_dict(trace: RunTrace, **extra) -> dict:
    out = {
        "status": trace.status.value,
        "iterations": trace.iterations,
        "best_dual": trace.best_dual,
        "best_primal": trace.best_primal,
        "gap": duality_gap(trace),
        "certified": trace.certified,
        "certificate_value": trace.certificate_value,
        "converged_iteration": trace.converged_iteration,
        "meta": trace.meta,
    }
    out.update(extra)
    return out


def write_summary(trace: RunTrace, path, **extra) -> dict:
    summary = summary_dict(trace, **extra)
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return summary


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
